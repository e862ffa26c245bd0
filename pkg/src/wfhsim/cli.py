"""Batch command-line front end: parameter sweeps, lock studies, Monte Carlo.

Every run resolves its configuration (shipped defaults, optional config file,
CLI overrides), computes all requested tables in memory, and only then writes
the output directory together with a ``manifest.json`` recording the resolved
configuration, the seed, and the package version.  A failed run writes
nothing.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, load_config
from .constellation import build_psk, loss_db_to_transmissivity
from .detector_sim import (
    difference_hist_from_counts,
    fidelity,
    run_experiment,
)
from .homodyne import HomodyneParams, hd_mutual_information
from .info_metrics import plugin_mi_estimate, wf_mutual_information
from .io import (
    read_trace_bin,
    read_trace_csv,
    render_table,
    render_table_json,
    write_trace_csv,
)
from .lock_sim import FOUR_CONDITIONS, four_conditions
from .phase_metrology import asd, octave_taus, overlapping_allan, rms_phase
from .security import kgr
from .wf_receiver import branch_means, default_d_max, difference_dist

WORKER_ENV = "WFHSIM_WORKERS"


@dataclass
class Table:
    name: str
    header: list[str]
    rows: list[tuple]
    meta: dict


def _workers() -> int:
    raw = os.environ.get(WORKER_ENV, "")
    if raw.strip():
        n = int(raw)
        if n < 1:
            raise ValueError(f"{WORKER_ENV} must be >= 1")
        return n
    return os.cpu_count() or 1


def _map_grid(fn, items):
    n = _workers()
    if n == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


# ------------------------------------------------------------------ commands


def cmd_sweep_mi(config: RunConfig) -> list[Table]:
    """MI vs loss for both receivers, both orders, and the visibility band."""
    grid = config.loss_grid()
    sigma_phi = float(config["receiver.phase_jitter_rms"])
    alpha = float(config["constellation.alpha"])
    cases = []
    for m in (2, 4):
        c = build_psk(m, alpha, config.sweep_phi0(m))
        for xi in config["sweep.visibilities"]:
            cases.append((m, c, float(xi)))

    def one_point(loss_db: float) -> list[tuple]:
        t = loss_db_to_transmissivity(loss_db)
        rows = []
        for m, c, xi in cases:
            wf = wf_mutual_information(c, config.receiver_params(t, visibility=xi))
            rows.append((loss_db, m, "wf", xi, sigma_phi, wf.mi_bits))
            hd = hd_mutual_information(
                c,
                HomodyneParams(transmissivity=t, visibility=xi),
                phase_jitter_rms=sigma_phi,
            )
            rows.append((loss_db, m, "hd", xi, sigma_phi, hd))
        return rows

    rows = [r for point in _map_grid(one_point, grid) for r in point]
    rows.sort(key=lambda r: (r[0], r[1], r[2], -r[3]))
    return [
        Table(
            name="sweep_mi",
            header=["loss_db", "m", "receiver", "visibility", "sigma_phi", "mi_bits"],
            rows=rows,
            meta={"alpha": alpha, "lo_amplitude": config["receiver.lo_amplitude"]},
        )
    ]


def cmd_sweep_kgr(config: RunConfig) -> list[Table]:
    """Key generation rate vs loss for both orders at the configured visibility."""
    grid = config.loss_grid()
    alpha = float(config["constellation.alpha"])
    cs = {m: build_psk(m, alpha, config.sweep_phi0(m)) for m in (2, 4)}

    def one_point(loss_db: float) -> list[tuple]:
        t = loss_db_to_transmissivity(loss_db)
        rows = []
        for m, c in cs.items():
            r = kgr(c, config.receiver_params(t))
            rows.append(
                (loss_db, m, r.kgr_bits, r.mi_bits, r.holevo_bits, r.insecure)
            )
        return rows

    rows = [r for point in _map_grid(one_point, grid) for r in point]
    rows.sort(key=lambda r: (r[0], r[1]))
    return [
        Table(
            name="sweep_kgr",
            header=["loss_db", "m", "kgr_bits", "mi_bits", "holevo_bits", "insecure"],
            rows=rows,
            meta={
                "alpha": alpha,
                "lo_amplitude": config["receiver.lo_amplitude"],
                "visibility": config["receiver.visibility"],
                "sigma_phi": config["receiver.phase_jitter_rms"],
            },
        )
    ]


def cmd_lock(config: RunConfig) -> tuple[list[Table], dict]:
    """Four-condition lock study: traces, Allan bands, spectral bands."""
    duration = float(config["lock.duration_s"])
    dt = float(config["lock.dt_s"])
    n_seeds = int(config["lock.n_seeds"])
    base_seed = int(config["lock.seed"])
    taus = config.lock_taus()
    seg = int(round(float(config["lock.asd_segment_s"]) / dt))
    overlap = float(config["lock.asd_overlap"])

    allan_curves = {c: [] for c in FOUR_CONDITIONS}
    spectra = {c: [] for c in FOUR_CONDITIONS}
    rms = {c: [] for c in FOUR_CONDITIONS}
    first_traces = {}
    freqs = None
    for s in range(n_seeds):
        traces = four_conditions(
            config.noise_model(seed=base_seed + s),
            config.pi_fast(),
            config.pi_slow(),
            duration,
            dt,
            actuator=config.actuator(),
        )
        for label, tr in traces.items():
            if s == 0:
                first_traces[label] = tr
            allan_curves[label].append(overlapping_allan(tr, taus).adev)
            spectrum = asd(tr, seg, overlap)
            spectra[label].append(spectrum.asd)
            freqs = spectrum.freqs
            rms[label].append(rms_phase(tr))

    tables = []
    meta_common = {
        "duration_s": duration,
        "dt_s": dt,
        "n_seeds": n_seeds,
        "seed": base_seed,
    }
    for label in FOUR_CONDITIONS:
        a = np.asarray(allan_curves[label])
        tables.append(
            Table(
                name=f"allan_{label}",
                header=["tau_s", "adev_mean", "adev_std"],
                rows=[
                    (tau, float(mu), float(sd))
                    for tau, mu, sd in zip(taus, a.mean(axis=0), a.std(axis=0))
                ],
                meta=dict(meta_common),
            )
        )
        p = np.asarray(spectra[label])
        tables.append(
            Table(
                name=f"asd_{label}",
                header=["freq_hz", "asd_mean", "asd_std"],
                rows=[
                    (float(f), float(mu), float(sd))
                    for f, mu, sd in zip(freqs, p.mean(axis=0), p.std(axis=0))
                ],
                meta={
                    **meta_common,
                    "window": "hann",
                    "overlap": overlap,
                    "segment_s": config["lock.asd_segment_s"],
                },
            )
        )
    summary = Table(
        name="lock_summary",
        header=["condition", "rms_mean", "rms_std"],
        rows=[
            (label, float(np.mean(rms[label])), float(np.std(rms[label])))
            for label in FOUR_CONDITIONS
        ],
        meta=dict(meta_common),
    )
    tables.append(summary)
    return tables, first_traces


def cmd_allan(config: RunConfig, input_path: str) -> list[Table]:
    trace = _read_trace(input_path)
    curve = overlapping_allan(trace, octave_taus(trace))
    rows = [
        (float(t), float(a), int(c))
        for t, a, c in zip(curve.taus, curve.adev, curve.counts)
        if c > 0
    ]
    return [
        Table(
            name="allan",
            header=["tau_s", "adev", "n_terms"],
            rows=rows,
            meta={"input": Path(input_path).name, "dt_s": trace.dt},
        )
    ]


def cmd_asd(config: RunConfig, input_path: str, segment_s: float, overlap: float) -> list[Table]:
    trace = _read_trace(input_path)
    seg = int(round(segment_s / trace.dt))
    spectrum = asd(trace, seg, overlap)
    return [
        Table(
            name="asd",
            header=["freq_hz", "asd"],
            rows=list(zip(spectrum.freqs, spectrum.asd)),
            meta={
                "input": Path(input_path).name,
                "window": spectrum.window,
                "overlap": spectrum.overlap,
                "resolution_bw_hz": spectrum.resolution_bw,
            },
        )
    ]


def _read_trace(path: str):
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"trace file {path} not found")
    with open(p, "rb") as fh:
        head = fh.read(8)
    if head.startswith(b"WFTRACE"):
        return read_trace_bin(p)
    return read_trace_csv(p)


def cmd_montecarlo(config: RunConfig) -> list[Table]:
    """Per-symbol difference histograms with theory overlays, plus plug-in MI."""
    z = math.sqrt(float(config["montecarlo.lo_mean"]))
    shots = int(config["montecarlo.shots"])
    reps = int(config["montecarlo.repetitions"])
    seed = int(config["montecarlo.seed"])
    imperfections = config.imperfections()
    tables = []
    summary_rows = []
    mi_rows = []
    for m in (2, 4):
        for mean_sig in config["montecarlo.signal_means"]:
            alpha = math.sqrt(float(mean_sig))
            c = build_psk(m, alpha, config.sweep_phi0(m))
            params = _params_with_lo(config, z)
            mus = [branch_means(s, params) for s in c.symbols]
            d_max = max(default_d_max(*mu) for mu in mus)
            theory = [difference_dist(mu[0], mu[1], d_max) for mu in mus]
            ss = np.random.SeedSequence([seed, m, int(round(mean_sig * 1000))])
            rep_seeds = ss.spawn(reps)
            rep_counts = []
            shots_per_rep = max(1, shots // reps)
            for r in range(reps):
                rng = np.random.default_rng(rep_seeds[r])
                counts = run_experiment(c, params, imperfections, shots_per_rep, rng)
                rep_counts.append(counts)
                mi_rows.append(
                    (m, mean_sig, r, plugin_mi_estimate(counts),
                     wf_mutual_information(c, params).mi_bits)
                )
            pooled: dict = {}
            for counts in rep_counts:
                for key, v in counts.items():
                    pooled[key] = pooled.get(key, 0) + v
            empirical = []
            for k in range(m):
                try:
                    empirical.append(difference_hist_from_counts(pooled, k, d_max))
                except ValueError:  # no records for this symbol at tiny shot counts
                    empirical.append(None)
            for k in range(m):
                emp = empirical[k]
                nxt = empirical[(k + 1) % m]
                summary_rows.append(
                    (
                        m,
                        mean_sig,
                        k,
                        fidelity(theory[k], emp) if emp is not None else 0.0,
                        fidelity(theory[k], emp, method="product") if emp is not None else 0.0,
                        float(np.minimum(emp.probs, nxt.probs).sum())
                        if emp is not None and nxt is not None
                        else 0.0,
                    )
                )
            header = ["d"]
            header += [f"p_empirical_{k}" for k in range(m)]
            header += [f"p_theory_{k}" for k in range(m)]
            rows = []
            for i, d in enumerate(range(-d_max, d_max + 1)):
                row = [d]
                row += [
                    float(empirical[k].probs[i]) if empirical[k] is not None else 0.0
                    for k in range(m)
                ]
                row += [float(theory[k].probs[i]) for k in range(m)]
                rows.append(tuple(row))
            tables.append(
                Table(
                    name=f"mc_hist_m{m}_sig{mean_sig:g}",
                    header=header,
                    rows=rows,
                    meta={
                        "lo_mean": config["montecarlo.lo_mean"],
                        "signal_mean": mean_sig,
                        "shots": shots,
                        "seed": seed,
                        "dark_mean": imperfections.dark_mean,
                        "crosstalk_prob": imperfections.crosstalk_prob,
                    },
                )
            )
    tables.append(
        Table(
            name="mc_summary",
            header=[
                "m",
                "signal_mean",
                "symbol",
                "fidelity_bhattacharyya",
                "fidelity_product",
                "overlap_next_symbol",
            ],
            rows=summary_rows,
            meta={"shots": shots, "seed": seed},
        )
    )
    tables.append(
        Table(
            name="mc_mi",
            header=["m", "signal_mean", "repetition", "mi_bits_plugin", "mi_bits_analytic"],
            rows=mi_rows,
            meta={"shots_per_repetition": max(1, shots // reps), "seed": seed},
        )
    )
    return tables


def _params_with_lo(config: RunConfig, lo_amplitude: float):
    from .wf_receiver import WfReceiverParams

    return WfReceiverParams(
        lo_amplitude=lo_amplitude,
        visibility=float(config["receiver.visibility"]),
        transmissivity=1.0,
        n_max=config["receiver.n_max"],
        phase_jitter_rms=float(config["receiver.phase_jitter_rms"]),
        jitter_quad_nodes=int(config["receiver.jitter_quad_nodes"]),
    )


def cmd_skellam(config: RunConfig) -> list[Table]:
    """Theoretical count-difference distributions for the configured setup."""
    z = math.sqrt(float(config["montecarlo.lo_mean"]))
    m = int(config["constellation.m"])
    tables = []
    for mean_sig in config["montecarlo.signal_means"]:
        alpha = math.sqrt(float(mean_sig))
        c = build_psk(m, alpha, config.sweep_phi0(m))
        params = _params_with_lo(config, z)
        mus = [branch_means(s, params) for s in c.symbols]
        d_max = max(default_d_max(*mu) for mu in mus)
        dists = [difference_dist(mu[0], mu[1], d_max) for mu in mus]
        rows = []
        for i, d in enumerate(range(-d_max, d_max + 1)):
            rows.append(tuple([d] + [float(dist.probs[i]) for dist in dists]))
        tables.append(
            Table(
                name=f"skellam_m{m}_sig{mean_sig:g}",
                header=["d"] + [f"p_theory_{k}" for k in range(m)],
                rows=rows,
                meta={"lo_mean": config["montecarlo.lo_mean"], "signal_mean": mean_sig},
            )
        )
    return tables


# ------------------------------------------------------------------ plumbing


def _write_outputs(
    outdir: Path,
    tables: list[Table],
    fmt: str,
    manifest: dict,
    traces: dict | None = None,
) -> list[str]:
    outdir.mkdir(parents=True, exist_ok=True)
    payloads: list[tuple[str, bytes]] = []
    for t in tables:
        if fmt == "json":
            payloads.append((f"{t.name}.json", render_table_json(t.header, t.rows, t.meta).encode()))
        else:
            payloads.append((f"{t.name}.csv", render_table(t.header, t.rows, t.meta).encode()))
    written: list[Path] = []
    names: list[str] = []
    try:
        for name, blob in payloads:
            target = outdir / name
            tmp = outdir / f".{name}.tmp{os.getpid()}"
            tmp.write_bytes(blob)
            os.replace(tmp, target)
            written.append(target)
            names.append(name)
        for label, trace in (traces or {}).items():
            target = outdir / f"trace_{label}.csv"
            tmp = outdir / f".trace_{label}.tmp{os.getpid()}"
            write_trace_csv(tmp, trace)
            os.replace(tmp, target)
            written.append(target)
            names.append(target.name)
        manifest = dict(manifest, outputs=sorted(names))
        target = outdir / "manifest.json"
        tmp = outdir / f".manifest.tmp{os.getpid()}"
        tmp.write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
        os.replace(tmp, target)
        written.append(target)
    except BaseException:
        for path in written:
            path.unlink(missing_ok=True)
        raise
    return names + ["manifest.json"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wfhsim",
        description="Coherent-state communication and phase-lock simulation toolkit",
    )
    parser.add_argument("--version", action="version", version=f"wfhsim {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="run configuration file")
    common.add_argument("--seed", type=int, help="override montecarlo.seed and lock.seed")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument(
        "--format", choices=("csv", "json"), help="output table format"
    )
    common.add_argument(
        "--set",
        metavar="KEY=VALUE",
        action="append",
        default=[],
        dest="overrides",
        help="override any config key (repeatable)",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("sweep-mi", parents=[common], help="mutual information vs channel loss")
    sub.add_parser("sweep-kgr", parents=[common], help="key generation rate vs channel loss")
    sub.add_parser("lock", parents=[common], help="four-condition lock characterization")
    p_allan = sub.add_parser("allan", parents=[common], help="Allan deviation of a trace file")
    p_allan.add_argument("--input", required=True, metavar="TRACE")
    p_asd = sub.add_parser("asd", parents=[common], help="spectral density of a trace file")
    p_asd.add_argument("--input", required=True, metavar="TRACE")
    p_asd.add_argument("--segment-s", type=float, default=0.5)
    p_asd.add_argument("--overlap", type=float, default=0.5)
    sub.add_parser("montecarlo", parents=[common], help="shot-by-shot receiver simulation")
    sub.add_parser("skellam", parents=[common], help="theoretical difference distributions")
    return parser


def run(args: argparse.Namespace) -> int:
    overrides: dict[str, str] = {}
    for item in args.overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value.strip()
    if args.seed is not None:
        overrides["montecarlo.seed"] = str(args.seed)
        overrides["lock.seed"] = str(args.seed)
    if args.out is not None:
        overrides["output.directory"] = args.out
    if args.format is not None:
        overrides["output.format"] = args.format
    config = load_config(args.config, overrides)
    traces = None
    if args.command == "sweep-mi":
        tables = cmd_sweep_mi(config)
    elif args.command == "sweep-kgr":
        tables = cmd_sweep_kgr(config)
    elif args.command == "lock":
        tables, traces = cmd_lock(config)
    elif args.command == "allan":
        tables = cmd_allan(config, args.input)
    elif args.command == "asd":
        tables = cmd_asd(config, args.input, args.segment_s, args.overlap)
    elif args.command == "montecarlo":
        tables = cmd_montecarlo(config)
    elif args.command == "skellam":
        tables = cmd_skellam(config)
    else:  # pragma: no cover - argparse enforces the choices
        raise ValueError(f"unknown command {args.command}")
    manifest = {
        "command": args.command,
        "version": __version__,
        "seed": args.seed,
        "config": config.resolved_strings,
    }
    outdir = Path(str(config["output.directory"]))
    names = _write_outputs(outdir, tables, str(config["output.format"]), manifest, traces)
    for name in names:
        print(outdir / name)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return run(args)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
