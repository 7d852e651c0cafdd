import json

import pytest
import yaml

from liouville_lab import cli, lab


def run(argv):
    return cli.main(argv)


def load(path):
    return json.loads(path.read_text())


def test_help_documents_every_flag(capsys):
    parser = cli.build_parser()
    sub = next(a for a in parser._actions if a.dest == "command")
    for name, sp in sub.choices.items():
        text = sp.format_help()
        for action in sp._actions:
            if action.dest == "help":
                continue
            assert action.help, (name, action.dest)
            for opt in action.option_strings:
                assert opt in text
    with pytest.raises(SystemExit) as info:
        run(["bubble", "--help"])
    assert info.value.code == 0
    assert "--per-decade" in capsys.readouterr().out


def test_missing_surface_is_usage_error(tmp_path, capsys):
    with pytest.raises(SystemExit) as info:
        run(["bubble", "--out", str(tmp_path)])
    assert info.value.code == 2
    assert "surface" in capsys.readouterr().err


def test_bad_surface_is_usage_error(tmp_path):
    with pytest.raises(SystemExit) as info:
        run(["solve", "--surface", "klein:32", "--out", str(tmp_path)])
    assert info.value.code == 2


def test_bubble_command(tmp_path):
    out = tmp_path / "b"
    code = run(["bubble", "--surface", "torus:128", "--alpha", "0.5", "--lmax", "1000",
                "--out", str(out)])
    summary = load(out / "summary.json")
    assert code == 0 and summary["pass"]
    assert summary["lambda_max"] == 128.0
    assert len(summary["rejected_lambdas"]) > 0
    assert all("exceeds" in r["reason"] for r in summary["rejected_lambdas"])
    for v in summary["verdicts"]:
        assert {"value", "target", "tolerance", "provenance", "pass"} <= set(v)
    assert (out / "bubble_scan.csv").read_text().startswith("alpha,lambda,x_id")
    cfg = yaml.safe_load((out / "config.yaml").read_text())
    assert cfg["surface"] == "torus:128" and cfg["alpha"] == 0.5


def test_exit_code_tracks_verdicts(tmp_path):
    # on a coarse grid the alpha = 0 mean slope misses its 3% window
    out = tmp_path / "b"
    code = run(["bubble", "--surface", "torus:32", "--alpha", "0", "--out", str(out)])
    summary = load(out / "summary.json")
    assert code == (0 if summary["pass"] else 1)
    assert code == 1


def test_reproducible_from_echoed_config(tmp_path):
    a = tmp_path / "a"
    run(["mt", "--surface", "torus:64", "--per-decade", "3", "--out", str(a)])
    cfg = yaml.safe_load((a / "config.yaml").read_text())
    cfg["out"] = str(tmp_path / "b")
    conf = tmp_path / "conf.yaml"
    conf.write_text(yaml.safe_dump(cfg))
    run(["mt", "--config", str(conf)])
    assert (a / "verdicts.json").read_bytes() == (tmp_path / "b" / "verdicts.json").read_bytes()
    assert (a / "deficit_scan.csv").read_bytes() == (tmp_path / "b" / "deficit_scan.csv").read_bytes()


def test_mt_variant_mismatch(tmp_path):
    code = run(["mt", "--surface", "torus:32", "--variant", "BoundaryFull",
                "--out", str(tmp_path)])
    assert code == 2


def test_conc_command(tmp_path):
    out = tmp_path / "c"
    code = run(["conc", "--surface", "torus:64", "--density", "bubble", "--lam", "40",
                "--center", "0.3,0.6", "--out", str(out)])
    rep = load(out / "report.json")
    assert code == 0
    assert rep["tau_source"] == "covering" and rep["covering_k"] > 0
    assert (out / "sigma.csv").exists() and (out / "T.csv").exists()


def test_conc_threshold_failure_record(tmp_path):
    out = tmp_path / "c"
    code = run(["conc", "--surface", "torus:32", "--density", "uniform", "--tau", "0.9",
                "--out", str(out)])
    assert code == 1
    rep = load(out / "report.json")
    assert rep["error"] == "ThresholdError" and rep["max_T"] > 0


def test_solve_and_scan(tmp_path):
    out = tmp_path / "s"
    code = run(["solve", "--surface", "torus:32", "--point", "0.25,0.25", "--alpha-j", "0.5",
                "--rho", "6.283185307179586", "--out", str(out)])
    assert code == 0
    summary = load(out / "summary.json")
    assert summary["converged"] and abs(summary["normalization"] - 1) < 1e-8
    assert len((out / "solution.csv").read_text().splitlines()) == 32 * 32 + 1

    sc = tmp_path / "scan"
    argv = ["scan", "--surface", "torus:32", "--rho-num", "4", "--out", str(sc)]
    assert run(argv) == 0
    trace = (sc / "trace.jsonl").read_text()
    assert run(argv + ["--resume"]) == 0
    assert (sc / "trace.jsonl").read_text() == trace
    q = load(sc / "quantization.json")
    assert q["first_failure"] is None


def test_point_alpha_mismatch(tmp_path):
    with pytest.raises(SystemExit):
        run(["solve", "--surface", "torus:32", "--point", "0.1,0.1", "--out", str(tmp_path)])


def test_acceptance_subset(tmp_path, capsys):
    out = tmp_path / "acc"
    code = run(["acceptance", "--criteria", "6", "--out", str(out)])
    assert code == 0
    assert "criterion  6 PASS" in capsys.readouterr().out
    rec = load(out / "criterion_06.json")
    assert rec["pass"] and (out / "criterion_06.json").read_text() == lab.dumps(rec)


def test_jobs_capped(monkeypatch):
    monkeypatch.setenv("LIOUVILLE_LAB_THREADS", "2")
    assert lab.max_jobs(8) == 2
    assert lab.max_jobs(None) == 1
    monkeypatch.delenv("LIOUVILLE_LAB_THREADS")
    assert lab.max_jobs(8) == 8


def test_structured_failure_record():
    rec = lab.run_criterion(6, {"c6": {"surface": "torus:4"}})
    assert rec["pass"] is False and rec["details"]["error"] == "ConfigurationError"


def test_determinism_detects_changes():
    a = {1: {"x": 1.0}}
    assert lab.determinism(a, {1: {"x": 1.0}})["pass"]
    assert not lab.determinism(a, {1: {"x": 1.0000001}})["pass"]
