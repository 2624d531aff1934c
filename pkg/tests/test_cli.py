import csv
import json

import numpy as np
import pytest

from vlc5g.cli import main
from vlc5g.distributions import TLS, DistributionSpec
from vlc5g.pipeline import OVERALL_PARAMS
from vlc5g.scenario import dumps, load_bundled


def run_cli(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def read_trace(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestRun:
    def test_default_scenario_trace(self, tmp_path, capsys):
        code, out, _ = run_cli(capsys, "run", "paper-default", "--out", tmp_path)
        assert code == 0
        rows = read_trace(tmp_path / "trace.csv")
        assert len(rows) == 2250
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["emitted"] == 2250
        assert "2250 records" in out

    def test_seed_is_byte_identical(self, tmp_path, capsys):
        a, b = tmp_path / "a", tmp_path / "b"
        assert run_cli(capsys, "run", "city-grid", "--seed", 7, "--out", a)[0] == 0
        assert run_cli(capsys, "run", "city-grid", "--seed", 7, "--out", b)[0] == 0
        assert (a / "trace.csv").read_bytes() == (b / "trace.csv").read_bytes()

    def test_replications(self, tmp_path, capsys):
        code, out, _ = run_cli(capsys, "run", "paper-default", "--duration", 50, "--replications", 2, "--out", tmp_path)
        assert code == 0
        assert (tmp_path / "trace_seed1.csv").exists() and (tmp_path / "trace_seed2.csv").exists()
        assert len(read_trace(tmp_path / "trace_seed2.csv")) == 50

    def test_report(self, tmp_path, capsys):
        code, _, _ = run_cli(capsys, "run", "paper-default", "--report", "--out", tmp_path)
        assert code == 0
        rep = json.loads((tmp_path / "report.json").read_text())
        assert set(rep["fits"]) == {"5g", "total"}
        assert set(rep["skipped"]) == {"processing", "vlc"}
        total = rep["fits"]["total"]
        assert len(total["cdf_grid"]["x_ms"]) == len(total["cdf_grid"]["empirical"])

    def test_invalid_scenario_exits_nonzero(self, tmp_path, capsys):
        text = dumps(load_bundled("city-grid")).replace('id = "L2"', 'id = "L1"')
        bad = tmp_path / "bad.toml"
        bad.write_text(text)
        code, _, err = run_cli(capsys, "run", bad, "--out", tmp_path / "o")
        assert code == 2
        assert "'L1'" in err and "light #1" in err and "light #2" in err
        assert not (tmp_path / "o").exists()
        assert run_cli(capsys, "validate", bad)[0] == 2

    def test_validate_ok(self, capsys):
        code, out, _ = run_cli(capsys, "validate", "city-grid")
        assert code == 0 and "OK" in out

    def test_missing_file(self, tmp_path, capsys):
        code, _, err = run_cli(capsys, "validate", tmp_path / "nope.toml")
        assert code != 0 and err


class TestFit:
    def test_synthetic_t_data(self, tmp_path, capsys):
        x = DistributionSpec(TLS, OVERALL_PARAMS).sample(np.random.default_rng(4), 3000)
        x = x[x > 0][:2250]
        path = tmp_path / "lat.csv"
        path.write_text("latency_ms\n" + "\n".join(repr(float(v) * 1e3) for v in x) + "\n")
        code, out, _ = run_cli(capsys, "fit", path, "--column", "latency_ms", "--out", tmp_path / "o")
        assert code == 0
        assert "winner: t-location-scale" in out
        rep = json.loads((tmp_path / "o" / "fit_report.json").read_text())
        assert rep["winner"] == "t-location-scale" and len(rep["fits"]) == 4
        for name in ("pdf_grid.csv", "cdf_grid.csv", "histogram.csv"):
            with open(tmp_path / "o" / name, newline="") as fh:
                rows = list(csv.reader(fh))
            assert len(rows) > 2
            assert all(np.isfinite(float(c)) for r in rows[1:] for c in r)

    def test_too_few_values(self, tmp_path, capsys):
        path = tmp_path / "few.csv"
        path.write_text("1\n2\n3\n4\n5\n")
        code, _, err = run_cli(capsys, "fit", path)
        assert code == 1 and "at least" in err

    def test_missing_column(self, tmp_path, capsys):
        path = tmp_path / "h.csv"
        path.write_text("a,b\n1,2\n")
        code, _, err = run_cli(capsys, "fit", path, "--column", "c")
        assert code == 1 and "'c' not found" in err

    def test_bad_rows_listed(self, tmp_path, capsys):
        path = tmp_path / "bad.csv"
        path.write_text("total_ms\n1\nx\n3\n\n-2\n" + "4\n" * 20)
        code, _, err = run_cli(capsys, "fit", path)
        assert code == 1 and "rows 3, 6" in err

    def test_unknown_family(self, tmp_path, capsys):
        with pytest.raises(SystemExit):
            main(["fit", "x.csv", "--families", "gamma"])

    def test_default_scenario_total_fit(self, tmp_path, capsys):
        assert run_cli(capsys, "run", "paper-default", "--out", tmp_path)[0] == 0
        code, out, _ = run_cli(capsys, "fit", tmp_path / "trace.csv", "--out", tmp_path / "f")
        assert code == 0
        rep = json.loads((tmp_path / "f" / "fit_report.json").read_text())
        best = rep["fits"][0]
        assert best["rank"] == 1 and best["family"] == rep["winner"]
        assert 10.5 <= best["params"]["mu_ms"] <= 13.5


class TestLinkBudget:
    def test_defaults(self, capsys):
        code, out, _ = run_cli(capsys, "link-budget")
        assert code == 0
        vals = dict(line.split("=") for line in out.strip().splitlines())
        vals = {k.strip(): float(v) for k, v in vals.items()}
        # 9e-4 / (100 pi) and gamma = 0.4 H / 1e-8
        assert vals["H"] == pytest.approx(2.86479e-06, rel=1e-5)
        assert vals["gamma"] == pytest.approx(114.592, rel=1e-5)

    def test_outside_fov(self, capsys):
        code, out, _ = run_cli(capsys, "link-budget", "--psi", 40)
        assert code == 0
        assert "H     = 0\n" in out and "gamma = 0\n" in out and "BER   = 0.5\n" in out

    def test_doubling_power_doubles_gamma(self, capsys):
        def gamma(*flags):
            out = run_cli(capsys, "link-budget", *flags)[1]
            return float(out.splitlines()[1].split("=")[1])

        assert gamma("--power", 2) == pytest.approx(2 * gamma("--power", 1), rel=1e-5)  # 6 printed digits

    def test_range(self, capsys):
        code, out, _ = run_cli(capsys, "link-budget", "--half-angle", 30, "--noise", 9.2e-9, "--gamma-min", 22.595)
        assert code == 0
        r = float(out.strip().splitlines()[-1].split("=")[1].split()[0])
        assert r == pytest.approx(40.0, abs=0.5)

    def test_out_of_range_flag(self, capsys):
        code, _, err = run_cli(capsys, "link-budget", "--half-angle", 95)
        assert code == 2 and err
