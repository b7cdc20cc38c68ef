import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from microchannel import (
    PRESETS,
    ScenarioConfig,
    ScenarioError,
    SweepError,
    load_scenario,
    run_compare,
    sweep,
    write_csv,
)
from microchannel.cli import main

# small, fast runs: a handful of particles over a short horizon
QUICK = {
    "n_particles": 3000,
    "t_end_s": 0.6,
    "snapshot_times_s": [],
    "t_grid": {"start_s": 0.3, "stop_s": 0.6, "step_s": 0.02},
}


def write_json(path, payload):
    path.write_text(json.dumps(payload))
    return path


class TestLoad:
    def test_row_i(self):
        cfg = load_scenario("pe_ll_pc")
        p = cfg.params
        assert (p.d, p.d0, p.x_r, p.v_m, p.D) == (5e-6, 0.0, 5e-3, 10e-3, 1e-10)
        assert (cfg.n_particles, cfg.dt, cfg.eps) == (100_000, 1e-3, 1e-2)
        assert cfg.t_grid[0] == pytest.approx(1e-4 * p.d**2 / (3 * p.D))
        assert cfg.t_grid[1:] == (2.0, 0.01)

    def test_four_table_rows_present(self):
        radii = {load_scenario(n).params.d for n in ("pe_ll_pc", "pe_sim_pc_15", "pe_sim_pc_40", "pc_ll_pe")}
        assert radii == {5e-6, 15e-6, 40e-6, 100e-6}

    def test_offset_override(self):
        cfg = load_scenario("pe_sim_pc_40", {"d0_frac": 0.25})
        assert cfg.params.d0 == pytest.approx(10e-6)
        assert load_scenario("pe_sim_pc_40_offset").params == cfg.params
        assert load_scenario("pe_sim_pc_15_offset").params.d0 == pytest.approx(7.5e-6)

    def test_file_inherits_preset(self, tmp_path):
        path = write_json(tmp_path / "mine.json", {"preset": "pe_sim_pc_15", "seed": 3, "d0_m": 1e-6})
        cfg = load_scenario(path)
        assert cfg.name == "mine" and cfg.seed == 3 and cfg.params.d0 == 1e-6

    def test_d0_violation_names_field(self, tmp_path):
        path = write_json(tmp_path / "bad.json", {"preset": "pe_ll_pc", "d0_m": 5e-6})
        with pytest.raises(ScenarioError, match="d0"):
            load_scenario(path)

    @pytest.mark.parametrize(
        "payload, field",
        [
            ({"preset": "pe_ll_pc", "D_m2_per_s": -1}, "D_m2_per_s"),
            ({"preset": "pe_ll_pc", "seed": 1.5}, "seed"),
            ({"preset": "pe_ll_pc", "t_grid": {"start_s": 0.0}}, "t_grid.start_s"),
            ({"preset": "pe_ll_pc", "bogus": 1}, "bogus"),
            ({"preset": "nope"}, "preset"),
            ({"x_r_m": 5e-3}, "d_m"),
        ],
    )
    def test_field_errors(self, tmp_path, payload, field):
        with pytest.raises(ScenarioError, match=field.replace(".", r"\.")):
            load_scenario(write_json(tmp_path / "s.json", payload))

    def test_unknown_and_malformed(self, tmp_path):
        with pytest.raises(ScenarioError, match="unknown preset"):
            load_scenario("no_such_thing")
        bad = tmp_path / "broken.json"
        bad.write_text("{not json")
        with pytest.raises(ScenarioError, match="malformed"):
            load_scenario(bad)

    def test_presets_are_valid(self):
        for name in PRESETS:
            assert isinstance(load_scenario(name), ScenarioConfig)


class TestRun:
    def test_analytic_only(self):
        report = run_compare(load_scenario("pe_sim_pc_15", {**QUICK, "n_particles": 0}))
        assert report.Nhit_empirical is None and report.sup_norm is None
        assert report.Nhit_analytic.shape == report.t_grid.shape == report.nhit_analytic.shape
        assert report.branch_gap is not None
        assert report.to_json()["sup_norm"] is None

    def test_simulate_only(self):
        report = run_compare(load_scenario("pe_sim_pc_15", QUICK), analytic=False)
        assert report.Nhit_analytic is None and report.Nhit_empirical is not None

    def test_repeatable(self):
        cfg = load_scenario("pe_sim_pc_15_offset", QUICK)
        a, b = run_compare(cfg), run_compare(cfg)
        assert json.dumps(a.to_json(), sort_keys=True) == json.dumps(b.to_json(), sort_keys=True)
        np.testing.assert_array_equal(a.Nhit_empirical, b.Nhit_empirical)

    def test_report_fields(self):
        cfg = load_scenario("pe_sim_pc_15", {**QUICK, "snapshot_times_s": [0.2]})
        out = run_compare(cfg).to_json()
        for key in ("pe", "pc", "d_e", "t_star", "sup_norm", "branch_gap", "uniformity_time"):
            assert key in out
        assert out["sup_norm"] >= 0
        assert out["radial"][0]["t"] == 0.2


class TestWrite:
    def test_files_and_round_trip(self, tmp_path):
        cfg = load_scenario("pe_sim_pc_15", {**QUICK, "snapshot_times_s": [0.2, 0.6]})
        report = run_compare(cfg)
        written = write_csv(report, tmp_path)
        assert {p.name for p in written} == {"nhit.csv", "radial_0.2.csv", "radial_0.6.csv", "report.json"}
        with open(tmp_path / "nhit.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert list(rows[0]) == ["t", "nhit_analytic", "Nhit_analytic", "Nhit_empirical"]
        gap = max(abs(float(r["Nhit_analytic"]) - float(r["Nhit_empirical"])) for r in rows)
        stored = json.loads((tmp_path / "report.json").read_text())["sup_norm"]
        assert gap == stored == report.sup_norm
        np.testing.assert_array_equal([float(r["t"]) for r in rows], report.t_grid)
        with open(tmp_path / "radial_0.2.csv") as fh:
            header = next(csv.reader(fh))
        assert header == ["r", "p_analytic", "p_empirical"]

    def test_empty_grid(self, tmp_path):
        cfg = load_scenario("pe_sim_pc_15", {**QUICK, "t_grid": {"start_s": 0.5, "stop_s": 0.4}})
        write_csv(run_compare(cfg), tmp_path)
        assert (tmp_path / "nhit.csv").read_text().strip() == "t,nhit_analytic,Nhit_analytic,Nhit_empirical"

    def test_overplot_grid(self, tmp_path):
        # default grid from t_floor to t_end in 0.01 s steps, analytic columns filled
        cfg = load_scenario("pe_sim_pc_15", {"n_particles": 0})
        report = run_compare(cfg)
        write_csv(report, tmp_path)
        with open(tmp_path / "nhit.csv") as fh:
            rows = list(csv.DictReader(fh))
        t = np.array([float(r["t"]) for r in rows])
        assert t[0] == pytest.approx(7.5e-5) and t[-1] <= 2.0 and len(rows) == 200
        assert all(r["Nhit_analytic"] and r["Nhit_empirical"] == "" for r in rows)

    def test_unwritable(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("")
        report = run_compare(load_scenario("pe_ll_pc", {**QUICK, "n_particles": 0}))
        with pytest.raises(OSError, match="file"):
            write_csv(report, blocker / "sub")


class TestSweep:
    def test_empty(self):
        assert sweep([]) == []

    def test_isolation_and_order(self, tmp_path):
        bad = write_json(tmp_path / "bad.json", {"preset": "pe_ll_pc", "d0_m": 1.0})
        good = load_scenario("pe_ll_pc", QUICK)
        out = sweep([bad, good, "missing_preset"])
        assert isinstance(out[0], SweepError) and "d0" in out[0].message
        assert out[1].name == "pe_ll_pc" and out[1].sup_norm is not None
        assert isinstance(out[2], SweepError)


class TestCli:
    def test_analytic(self, tmp_path, capsys):
        assert main(["analytic", "pe_ll_pc", "--out", str(tmp_path)]) == 0
        assert "Pe=250" in capsys.readouterr().out
        assert (tmp_path / "report.json").exists()

    def test_compare_with_overrides(self, tmp_path):
        args = ["compare", "--preset", "pe_ll_pc", "--particles", "2000", "--t-end", "0.5", "--seed", "4",
                "--out", str(tmp_path)]
        assert main(args) == 0
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["n_particles"] == 2000 and report["seed"] == 4

    def test_threshold_violation(self, tmp_path):
        cfg = write_json(tmp_path / "strict.json", {**QUICK, "preset": "pe_ll_pc",
                                                   "thresholds": {"sup_norm_max": 0.0}})
        assert main(["compare", str(cfg), "--out", str(tmp_path / "o")]) == 1
        loose = write_json(tmp_path / "loose.json", {**QUICK, "preset": "pe_ll_pc",
                                                    "thresholds": {"sup_norm_max": 1.0}})
        assert main(["compare", str(loose), "--out", str(tmp_path / "p")]) == 0

    def test_errors(self, tmp_path):
        assert main(["analytic", "nope", "--out", str(tmp_path)]) == 1
        assert main(["analytic", "--out", str(tmp_path)]) == 2
        with pytest.raises(SystemExit) as info:
            main(["frobnicate"])
        assert info.value.code == 2

    def test_sweep_dirs(self, tmp_path):
        code = main(["sweep", "pe_ll_pc", "pc_ll_pe", "nope", "--particles", "0", "--out", str(tmp_path)])
        assert code == 1
        assert (tmp_path / "pe_ll_pc" / "nhit.csv").exists()
        assert (tmp_path / "pc_ll_pe" / "report.json").exists()

    def test_module_entry(self, tmp_path):
        proc = subprocess.run([sys.executable, "-m", "microchannel", "--help"], capture_output=True, text=True)
        assert proc.returncode == 0 and "compare" in proc.stdout
