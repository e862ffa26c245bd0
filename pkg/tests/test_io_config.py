import math

import numpy as np
import pytest

from wfhsim.config import ConfigError, load_config, parse_config_text
from wfhsim.io import (
    format_value,
    parse_table,
    read_records_bin,
    read_trace_bin,
    read_trace_csv,
    render_table,
    write_records_bin,
    write_records_csv,
    write_trace_bin,
    write_trace_csv,
)
from wfhsim.detector_sim import ShotRecord
from wfhsim.phase_metrology import PhaseTrace


class TestFloatFormatting:
    @pytest.mark.parametrize(
        "x", [0.1, 1.0 / 3.0, 2.04, math.pi, 1e-300, 12345.6789, 1e17, 4.9e-324]
    )
    def test_round_trip_exact(self, x):
        assert float(format_value(x)) == x

    def test_ints_stay_ints(self):
        assert format_value(42) == "42"

    def test_bools_lowercase(self):
        assert format_value(True) == "true"


class TestTables:
    def test_csv_round_trip(self):
        header = ["a", "b"]
        rows = [(1, 0.1), (2, 1.0 / 3.0)]
        text = render_table(header, rows, meta={"alpha": 2.04})
        meta, hdr, parsed = parse_table(text)
        assert hdr == header
        assert float(meta["alpha"]) == 2.04
        assert [(int(r[0]), float(r[1])) for r in parsed] == rows

    def test_lf_endings_and_header(self):
        text = render_table(["x"], [(1,)])
        assert "\r" not in text
        assert text.splitlines()[0] == "x"


class TestTraceFiles:
    def test_csv_round_trip(self, tmp_path):
        trace = PhaseTrace(np.array([0.1, -0.2, 0.3]), 1e-3)
        path = tmp_path / "trace.csv"
        write_trace_csv(path, trace)
        back = read_trace_csv(path)
        assert np.array_equal(back.samples, trace.samples)
        assert back.dt == trace.dt

    def test_csv_dt_inferred_without_meta(self, tmp_path):
        path = tmp_path / "bare.csv"
        path.write_text("t_s,value\n0,0.5\n0.001,0.25\n0.002,0.75\n")
        back = read_trace_csv(path)
        assert back.dt == pytest.approx(1e-3)

    def test_binary_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        trace = PhaseTrace(rng.normal(size=1000), 1e-4)
        path = tmp_path / "trace.bin"
        write_trace_bin(path, trace)
        back = read_trace_bin(path)
        assert np.array_equal(back.samples, trace.samples)
        assert back.dt == trace.dt

    def test_binary_magic_checked(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"not a trace")
        with pytest.raises(ValueError):
            read_trace_bin(path)


class TestRecordFiles:
    def test_csv(self, tmp_path):
        records = [ShotRecord(0, 3, 1), ShotRecord(1, 0, 4)]
        path = tmp_path / "records.csv"
        write_records_csv(path, records)
        _, header, rows = parse_table(path.read_text())
        assert header == ["k", "n", "m"]
        assert [[int(c) for c in r] for r in rows] == [[0, 3, 1], [1, 0, 4]]

    def test_binary_round_trip(self, tmp_path):
        records = [ShotRecord(0, 3, 1), ShotRecord(1, 0, 4), ShotRecord(3, 12, 9)]
        path = tmp_path / "records.bin"
        write_records_bin(path, records)
        assert read_records_bin(path) == [(0, 3, 1), (1, 0, 4), (3, 12, 9)]


class TestConfig:
    def test_defaults_load(self):
        config = load_config()
        assert config["constellation.m"] == 4
        assert config["receiver.lo_amplitude"] == pytest.approx(3.53)
        assert config["sweep.visibilities"] == (1.0, 0.845)

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown key"):
            parse_config_text("receiver.typo = 1\n")

    def test_malformed_line_rejected(self):
        with pytest.raises(ConfigError, match="key = value"):
            parse_config_text("just some words\n")

    def test_user_file_overrides_defaults(self, tmp_path):
        f = tmp_path / "run.cfg"
        f.write_text("receiver.visibility = 0.845\n# comment\n")
        config = load_config(f)
        assert config["receiver.visibility"] == 0.845

    def test_explicit_overrides_win(self, tmp_path):
        f = tmp_path / "run.cfg"
        f.write_text("montecarlo.shots = 5\n")
        config = load_config(f, overrides={"montecarlo.shots": "7"})
        assert config["montecarlo.shots"] == 7

    def test_invalid_value_reports_key(self):
        with pytest.raises(ConfigError, match="constellation.m"):
            load_config(overrides={"constellation.m": "four"})

    def test_loss_grid(self):
        config = load_config(overrides={
            "channel.loss_db_start": "0",
            "channel.loss_db_stop": "1",
            "channel.loss_db_step": "0.25",
        })
        assert config.loss_grid() == pytest.approx([0.0, 0.25, 0.5, 0.75, 1.0])

    def test_empty_grid_rejected_at_load(self):
        with pytest.raises(ConfigError):
            load_config(overrides={"channel.loss_db_step": "-1"})

    @pytest.mark.parametrize(
        "key,value,section",
        [
            ("receiver.visibility", "1.5", "receiver"),
            ("constellation.m", "1", "constellation"),
            ("montecarlo.crosstalk_prob", "1.0", "montecarlo"),
            ("lock.noise_white_rms", "-0.1", "lock"),
            ("lock.asd_overlap", "0.95", "lock"),
            ("sweep.visibilities", "1.0, 1.2", "sweep"),
        ],
    )
    def test_module_invariants_checked_at_load(self, key, value, section):
        with pytest.raises(ConfigError, match=section):
            load_config(overrides={key: value})

    def test_auto_phi0(self):
        config = load_config()
        assert config.constellation_phi0(4) == pytest.approx(math.pi / 8)
        config2 = load_config(overrides={"constellation.phi0": "0.5"})
        assert config2.constellation_phi0(4) == 0.5

    def test_format_validation(self):
        with pytest.raises(ConfigError):
            load_config(overrides={"output.format": "xml"})
