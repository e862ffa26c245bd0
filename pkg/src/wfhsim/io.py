"""CSV/JSON/binary serialization with bit-exact round trips.

All floats are printed with 17 significant digits so re-parsing reproduces
the exact double; CSV files use LF endings, a mandatory header row, and
optional ``# key=value`` metadata comment lines.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .phase_metrology import PhaseTrace


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def render_table(header, rows, meta: dict | None = None) -> str:
    lines = []
    if meta:
        for k, v in meta.items():
            lines.append(f"# {k}={format_value(v)}")
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    return "\n".join(lines) + "\n"


def render_table_json(header, rows, meta: dict | None = None) -> str:
    payload = {
        "meta": {k: v for k, v in (meta or {}).items()},
        "columns": list(header),
        # floats serialized as 17-digit strings to keep byte-exact round trips
        "rows": [[format_value(v) for v in row] for row in rows],
    }
    return json.dumps(payload, indent=1) + "\n"


def parse_table(text: str) -> tuple[dict, list[str], list[list[str]]]:
    meta: dict = {}
    header: list[str] | None = None
    rows: list[list[str]] = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                k, v = body.split("=", 1)
                meta[k.strip()] = v.strip()
            continue
        cells = line.split(",")
        if header is None:
            header = cells
        else:
            rows.append(cells)
    if header is None:
        raise ValueError("no header row found")
    return meta, header, rows


# ---------------------------------------------------------------- traces

TRACE_MAGIC = b"WFTRACE1"


def write_trace_csv(path: Path | str, trace: PhaseTrace) -> None:
    rows = [(i * trace.dt, v) for i, v in enumerate(trace.samples)]
    Path(path).write_text(
        render_table(["t_s", "value"], rows, meta={"dt": trace.dt}), newline="\n"
    )


def read_trace_csv(path: Path | str) -> PhaseTrace:
    meta, header, rows = parse_table(Path(path).read_text())
    if header[:2] != ["t_s", "value"]:
        raise ValueError(f"unexpected trace header {header}")
    values = np.array([float(r[1]) for r in rows])
    if "dt" in meta:
        dt = float(meta["dt"])
    else:
        if len(rows) < 2:
            raise ValueError("cannot infer dt from fewer than 2 samples")
        dt = float(rows[1][0]) - float(rows[0][0])
    return PhaseTrace(samples=values, dt=dt)


def write_trace_bin(path: Path | str, trace: PhaseTrace) -> None:
    """Binary trace: magic, header line with dt and count, little-endian f64."""
    with open(path, "wb") as fh:
        fh.write(TRACE_MAGIC)
        fh.write(f" dt={trace.dt:.17g} n={len(trace)}\n".encode("ascii"))
        fh.write(trace.samples.astype("<f8").tobytes())


def read_trace_bin(path: Path | str) -> PhaseTrace:
    data = Path(path).read_bytes()
    if not data.startswith(TRACE_MAGIC):
        raise ValueError("not a trace file (bad magic)")
    nl = data.index(b"\n")
    fields = dict(
        kv.split(b"=", 1) for kv in data[len(TRACE_MAGIC) : nl].split() if b"=" in kv
    )
    dt = float(fields[b"dt"])
    n = int(fields[b"n"])
    samples = np.frombuffer(data, dtype="<f8", offset=nl + 1, count=n)
    return PhaseTrace(samples=samples.copy(), dt=dt)


# ---------------------------------------------------------------- records

RECORDS_MAGIC = b"WFRECORDS1"


def write_records_csv(path: Path | str, records) -> None:
    rows = [(r.symbol_index, r.n, r.m) for r in records]
    Path(path).write_text(render_table(["k", "n", "m"], rows), newline="\n")


def write_records_bin(path: Path | str, records) -> None:
    """Binary records: magic + count header, then int32 LE (k, n, m) triplets."""
    rows = [(r.symbol_index, r.n, r.m) for r in records]
    with open(path, "wb") as fh:
        fh.write(RECORDS_MAGIC)
        fh.write(f" n={len(rows)}\n".encode("ascii"))
        for k, n, m in rows:
            fh.write(struct.pack("<iii", k, n, m))


def read_records_bin(path: Path | str) -> list[tuple[int, int, int]]:
    data = Path(path).read_bytes()
    if not data.startswith(RECORDS_MAGIC):
        raise ValueError("not a records file (bad magic)")
    nl = data.index(b"\n")
    n = int(data[len(RECORDS_MAGIC) : nl].split(b"=")[1])
    out = []
    off = nl + 1
    for _ in range(n):
        out.append(struct.unpack_from("<iii", data, off))
        off += 12
    return out
