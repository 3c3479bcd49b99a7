import csv
import json
import math

import numpy as np
import pytest

from csflab import io, scenarios
from csflab.cli import IDENTITY_HEADER, PHASE_HEADER, main
from csflab.errors import ConfigError
from csflab.flow import FlowState
from csflab.functionals import FunctionalSample, sample

SERIES_HEADER = ("t,dt,length,kappa_max,kappa_min,tau_max,tau_min,total_curvature,total_torsion,"
                 "ct_entropy,tau_log_quantity,d_quantity,sup_tau_over_kappa,sup_tau_over_kappa2,"
                 "gaussian_entropy,min_tau_margin,flat_point_count,twisted")


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def cli(*args):
    return main([str(a) for a in args])


class TestFormats:
    @pytest.mark.parametrize("value,text", [(None, ""), (float("nan"), ""), (True, "true"), (False, "false"),
                                            (3, "3"), (0.1, "0.1"), (1e-300, "1e-300"), ("BlowUp", "BlowUp")])
    def test_format_value(self, value, text):
        assert io.format_value(value) == text

    def test_series_round_trip(self, tmp_path):
        series = [sample(FlowState.initial(scenarios.make(p, {}, 64)), lam)
                  for p, lam in [("torus_coil", True), ("circle", False), ("spherical_lissajous", False)]]
        io.write_series(tmp_path / "s.csv", series)
        assert open(tmp_path / "s.csv").readline().strip() == SERIES_HEADER
        back = io.read_series(tmp_path / "s.csv")
        assert back == series

    def test_json_nan_is_null(self, tmp_path):
        io.write_json(tmp_path / "a.json", {"x": float("nan"), "y": np.float64(2.0), "z": np.arange(2)})
        assert json.loads((tmp_path / "a.json").read_text()) == {"x": None, "y": 2.0, "z": [0, 1]}


class TestConfig:
    def test_toml_with_params(self, tmp_path):
        p = tmp_path / "c.toml"
        p.write_text('preset = "torus_coil"\nn = 128\nt_end = 0.1\n[params]\nR = 3.0\n')
        cfg = io.load_config(p, {"n": 64, "out": None})
        assert (cfg.preset, cfg.n, cfg.t_end, cfg.params) == ("torus_coil", 64, 0.1, {"R": 3.0})

    @pytest.mark.parametrize("text", ['presett = "circle"', 'n = 15', 'n = 2.5', 'preset = "trefoil"',
                                      'sigma_cfl = 0.9', 'identities = ["nope"]', 'n = [', 'plots = 1'])
    def test_bad_config_raises(self, tmp_path, text):
        p = tmp_path / "c.toml"
        p.write_text(text + "\n")
        with pytest.raises(ConfigError):
            io.load_config(p)

    def test_cli_exit_two_on_bad_config(self, tmp_path, capsys):
        p = tmp_path / "c.toml"
        p.write_text("unknown_key = 1\n")
        assert cli("run", "--config", p, "--out", tmp_path / "o") == 2
        assert "unknown_key" in capsys.readouterr().err

    def test_cli_exit_two_on_missing_file(self, tmp_path):
        assert cli("run", "--config", tmp_path / "missing.toml") == 2

    def test_seed_on_seedless_preset(self, tmp_path):
        assert cli("run", "--preset", "circle", "--seed", 3, "--out", tmp_path) == 2

    def test_bad_preset_params(self, tmp_path):
        p = tmp_path / "c.toml"
        p.write_text('preset = "torus_coil"\n[params]\nr = 5.0\n')
        assert cli("run", "--config", p, "--out", tmp_path / "o") == 2


@pytest.fixture(scope="module")
def circle_out(tmp_path_factory):
    out = tmp_path_factory.mktemp("circle")
    assert cli("run", "--preset", "circle", "--n", 32, "--t-end", 0.45, "--out", out) == 0
    return out


class TestRun:
    def test_outputs(self, circle_out):
        rows = read_csv(circle_out / "series.csv")
        assert ",".join(rows[0]) == SERIES_HEADER
        assert len(rows) == 47
        assert len(list((circle_out / "snapshots").glob("snapshot_*.csv"))) == 46
        snap = read_csv(circle_out / "snapshots" / "snapshot_0000.csv")
        assert snap[0] == ["u", "x", "y", "z", "kappa", "tau", "tau_valid"]
        assert (circle_out / "events.jsonl").read_text() == ""

    def test_verdict(self, circle_out):
        v = json.loads((circle_out / "verdict.json").read_text())
        assert v["classification"] == "TypeI"
        assert v["omega_hat"] == pytest.approx(0.5, abs=1e-4)
        assert v["stop_reason"] == "EndTime"
        assert v["monotonicity"]["total_curvature_nonincreasing"]

    def test_figures(self, circle_out):
        for name in ("functionals.png", "curves.png", "indicator.png"):
            data = (circle_out / "figures" / name).read_bytes()
            assert data[:8] == b"\x89PNG\r\n\x1a\n"

    def test_no_plots(self, tmp_path):
        assert cli("run", "--preset", "circle", "--n", 16, "--t-end", 0.02, "--out", tmp_path, "--no-plots") == 0
        assert not (tmp_path / "figures").exists()

    def test_events_written(self, tmp_path):
        assert cli("run", "--preset", "perturbed_circle_3d", "--n", 64, "--t-end", 1.0, "--out", tmp_path,
                   "--no-plots") == 0
        events = [json.loads(line) for line in (tmp_path / "events.jsonl").read_text().splitlines()]
        ks = [e["kind"] for e in events]
        assert ks.index("FlatPointEmerged") < ks.index("SingularityStop")
        assert set(events[0]) == {"t", "kind", "node", "payload"}

    def test_byte_identical(self, tmp_path):
        args = ["run", "--preset", "perturbed_circle_3d", "--seed", 7, "--n", 32, "--t-end", 0.05,
                "--lambda-entropy", "--no-plots"]
        assert cli(*args, "--out", tmp_path / "a") == 0
        assert cli(*args, "--out", tmp_path / "b") == 0
        assert (tmp_path / "a" / "series.csv").read_bytes() == (tmp_path / "b" / "series.csv").read_bytes()
        lam = [r[14] for r in read_csv(tmp_path / "a" / "series.csv")[1:]]
        assert all(float(x) >= 1.0 for x in lam)


class TestVerify:
    def test_circle_total_curvature(self, tmp_path):
        assert cli("verify", "--preset", "circle", "--identities", "total_curvature", "--out", tmp_path) == 0
        rows = read_csv(tmp_path / "identities.csv")
        assert rows[0] == IDENTITY_HEADER
        body = rows[1:]
        assert any(r[1].startswith("interior:") for r in body)
        assert [r[1] for r in body if not r[1].startswith("interior")] == ["0", "1", "2"]
        assert all(abs(float(r[5])) < 1e-10 for r in body)

    def test_log_tau_identity_on_planar_preset(self, tmp_path):
        assert cli("verify", "--preset", "circle", "--identities", "ct_entropy", "--out", tmp_path) == 2

    def test_unknown_identity(self, tmp_path):
        assert cli("verify", "--preset", "circle", "--identities", "bogus", "--out", tmp_path) == 2


class TestSweep:
    def test_examples(self, tmp_path):
        assert cli("sweep", "--kappa0", 1, 3, "--tau0", 1, 0.1, 0, "--out", tmp_path) == 0
        rows = read_csv(tmp_path / "phase.csv")
        assert rows[0] == PHASE_HEADER
        body = rows[1:]
        assert [(float(r[0]), float(r[1])) for r in body] == [(1, 1), (1, 0.1), (1, 0), (3, 1), (3, 0.1), (3, 0)]
        by = {(float(r[0]), float(r[1])): r for r in body}
        assert float(by[1, 1][3]) == pytest.approx(2.0, abs=1e-4)
        assert float(by[1, 1][2]) == 2.0
        assert float(by[3, 0.1][3]) == pytest.approx(90.1, rel=1e-3)
        assert float(by[1, 1][4]) < 1e-8
        assert by[1, 0][5] == "BlowUp" and by[1, 0][2] == ""

    def test_parallel_matches_serial(self, tmp_path):
        grid = ["--kappa0", 0.5, 1, 2, "--tau0", 0.2, 1, "--dt", 1e-3]
        assert cli("sweep", *grid, "--out", tmp_path / "s") == 0
        assert cli("sweep", *grid, "--workers", 2, "--out", tmp_path / "p") == 0
        assert (tmp_path / "s" / "phase.csv").read_bytes() == (tmp_path / "p" / "phase.csv").read_bytes()
