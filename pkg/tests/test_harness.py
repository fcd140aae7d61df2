import json
import math

import numpy as np
import pytest

from qnvp.errors import ConfigParse, ValidationError
from qnvp.harness.cli import main
from qnvp.harness.config import StudyConfig, apply_overrides, load_config, parse_override
from qnvp.harness.persistence import Report, prepare_output, validate_manifest, write_report
from qnvp.harness.studies import run_study
from qnvp.phase_space import PhaseGrid
from qnvp.transport import WeightedCloud, write_cloud_csv

SMALL_TREND = ["--set", "eps_list=[0.2]", "--set", "grid.nx=8", "--set", "grid.nv=64",
               "--set", "ensemble.n_nodes=2", "--set", "params.T=0.2"]


def test_config_defaults_and_validation():
    cfg = StudyConfig()
    assert cfg.kind == "landau-benchmark" and cfg.eps_list == [0.2, 0.1, 0.05]
    with pytest.raises(ValidationError):
        StudyConfig(kind="nope")
    with pytest.raises(ValidationError):
        StudyConfig(eps_list=[0.1, 0.2])
    with pytest.raises(ValidationError):
        StudyConfig(eps_list=[1.5])


def test_parse_error_reports_line_and_column(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text('kind = "landau-benchmark"\n[grid]\nnx = = 3\n')
    with pytest.raises(ConfigParse) as exc:
        load_config(path)
    assert "line 3" in str(exc.value) and "column" in str(exc.value)


def test_unknown_key(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text("[grid]\nnz = 3\n")
    with pytest.raises(ConfigParse, match="grid.'nz'"):
        load_config(path)


def test_overrides():
    assert parse_override("grid.nx=64") == (["grid", "nx"], 64)
    assert parse_override("kind=scaling-verify") == (["kind"], "scaling-verify")
    assert parse_override("eps_list=[0.5,0.25]") == (["eps_list"], [0.5, 0.25])
    data = apply_overrides({"grid": {"nv": 8}}, ["grid.nx=4", "params.alpha=0.1"])
    assert data == {"grid": {"nv": 8, "nx": 4}, "params": {"alpha": 0.1}}
    with pytest.raises(ConfigParse):
        parse_override("novalue")
    cfg = load_config(None, ["grid.nx=4", "solver.dt=0.5"], require_file=False)
    assert cfg.grid.nx == 4 and cfg.solver.dt == 0.5


def test_shipped_configs_parse():
    from pathlib import Path

    root = Path(__file__).resolve().parents[1] / "configs"
    kinds = {load_config(p).kind for p in root.glob("*.toml")}
    assert kinds == {"landau-benchmark", "wasserstein-trend", "regularity-rate", "scaling-verify", "aset-report"}


def test_output_guard(tmp_path):
    rep = Report("landau-benchmark")
    rep.table("t", ["a"], "op").add(1.0)
    out = prepare_output(tmp_path / "run")
    write_report(rep, out, {}, 0.0)
    with pytest.raises(ValidationError):
        prepare_output(tmp_path / "run")
    prepare_output(tmp_path / "run", force=True)
    (out / "t.csv").unlink()
    with pytest.raises(ValidationError):
        validate_manifest(out)


def test_cli_exit_codes(tmp_path, capsys):
    assert main(["frobnicate"]) == 2
    assert main([]) == 2
    assert main(["study"]) == 2
    assert main(["study", "--config", str(tmp_path / "missing.toml")]) == 2
    assert main(["bounds", "--set", "eps_list=[1.0]"]) == 2
    assert "error:" in capsys.readouterr().err


def test_cli_numerical_failure_exit_code(tmp_path, monkeypatch):
    from qnvp.errors import BlowUp
    from qnvp.harness import cli

    def boom(cfg):
        raise BlowUp("synthetic")

    monkeypatch.setattr(cli, "run_study", boom)
    assert main(["aset-report", "--output", str(tmp_path / "o")]) == 3


def test_cli_bounds(capsys):
    assert main(["bounds", "--set", "eps_list=[0.5,0.25]"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "eps,log_B,log_rate_kinetic,log_rate_field_l1,log_phi,log_psi"
    assert len(lines) == 3
    row = [float(x) for x in lines[1].split(",")]
    assert row[0] == 0.5 and row[2] == pytest.approx(math.log(2) - 8)


def test_cli_norms(tmp_path, capsys):
    t = np.linspace(1, 4, 7)
    np.savetxt(tmp_path / "s.csv", np.column_stack([t, t * np.exp(-3 * t)]), delimiter=",")
    assert main(["norms", str(tmp_path / "s.csv"), "--epsilon", "0.5", "--set", "norm.t0=1.0"]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert abs(rec["norm_value_log"]) <= 1e-12 and rec["argmax_time"] >= 1.0


def test_cli_wasserstein(tmp_path, capsys):
    write_cloud_csv(tmp_path / "a.csv", WeightedCloud([[0.3, 0.0]], [1.0]))
    write_cloud_csv(tmp_path / "b.csv", WeightedCloud([[0.3, 1.0]], [1.0]))
    assert main(["wasserstein", str(tmp_path / "a.csv"), str(tmp_path / "b.csv"), "--q", "2"]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["method"] == "exact" and rec["value"] == pytest.approx(1.0, abs=1e-9)


def test_simulate_and_verify_scaling(tmp_path, capsys):
    out = tmp_path / "sim"
    args = ["simulate", "--output", str(out), "--set", "grid.nx=16", "--set", "grid.nv=64",
            "--set", f"grid.length={4 * math.pi}", "--set", "solver.dt=0.05", "--set", "solver.t_end=0.5"]
    assert main(args) == 0
    assert len(list((out / "snapshots").glob("f_*.csv"))) == 4
    assert main(args) == 2
    capsys.readouterr()
    assert main(["verify-scaling", str(out), "--epsilon", "0.5"]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["mass_error"] <= 1e-13
    assert rec["gauss_residual"] <= 1e-10
    assert rec["identity_errors"]["l=0,k=0"] == 0.0


def test_study_writes_manifest(tmp_path):
    out = tmp_path / "trend"
    assert main(["study", "--config", "configs/wasserstein_trend.toml", "--output", str(out), *SMALL_TREND]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    paths = {a["path"] for a in manifest["artifacts"]}
    assert {"trend.csv", "w1_series.csv", "summary.txt"} <= paths
    assert all(a["operation"] for a in manifest["artifacts"])
    assert manifest["config"]["eps_list"] == [0.2]
    assert "numpy" in manifest["versions"]
    rows = (out / "trend.csv").read_text().strip().splitlines()
    assert len(rows) == 3
    assert "trend_ok = not-asserted" in (out / "summary.txt").read_text()


def test_trend_distance_at_start_is_the_regularisation_floor(tmp_path):
    cfg = load_config("configs/wasserstein_trend.toml", [a for a in SMALL_TREND if a != "--set"])
    rep = run_study(cfg)
    dv = PhaseGrid(8, 64, 1.0, 1.0).dv
    sigma = 3 * dv
    tbl = rep.tables["w1_series"]
    start = [w for t, w in zip(tbl.column("t"), tbl.column("w1")) if t == 0]
    alpha_eps = 0.2 * 0.5 * 1.1
    assert all(w <= sigma * math.sqrt(2 / math.pi) + alpha_eps / math.pi for w in start)
    assert all(c >= 0 for c in rep.tables["trend"].column("C_T_fit"))


def test_landau_study_without_perturbation():
    cfg = load_config(None, ["kind=landau-benchmark", "grid.nx=16", "grid.nv=64", f"grid.length={4 * math.pi}",
                             "solver.dt=0.1", "solver.t_end=3.0", "params.alpha=0.0"], require_file=False)
    rep = run_study(cfg)
    assert rep.summary["fit"] == "skipped"
    assert max(rep.tables["field_energy"].column("field_energy")) <= 1e-20
    assert math.isfinite(rep.summary["log_norm_fstar"])


def test_regularity_field_cases():
    cfg = load_config("configs/regularity.toml", ["eps_list=[0.5]", "grid.nx=8", "grid.nv=32",
                                                  "params.t_end_h=2.5", "params.sample_dh=0.5"])
    rep = run_study(cfg)
    cases = {(l, k) for l, k in zip(rep.tables["field_rate"].column("l"), rep.tables["field_rate"].column("k"))}
    assert (0, 0) not in cases and (1, 0) not in cases
    assert {(1, 1), (0, 1), (0, 2), (2, 0)} <= cases
    with pytest.raises(ValidationError):
        run_study(load_config("configs/regularity.toml", ["ensemble.n_nodes=2"]))


def test_parallel_workers_match_serial(tmp_path):
    base = load_config("configs/aset.toml", ["grid.nx=16", "aset.T=0.2", "eps_list=[0.2,0.1]"])
    par = load_config("configs/aset.toml", ["grid.nx=16", "aset.T=0.2", "eps_list=[0.2,0.1]", "workers=2"])
    a, b = run_study(base), run_study(par)
    for name in a.tables:
        assert a.tables[name].to_csv() == b.tables[name].to_csv()
