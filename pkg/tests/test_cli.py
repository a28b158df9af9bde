import json

import pytest

from noisyoptics.cli import main


def test_run_writes_csv(tmp_path):
    code = main(["run", "xgate-gbqc", "--noise", "dep", "-p", "0.01", "--samples", "300", "--out", str(tmp_path)])
    assert code == 0
    text = (tmp_path / "xgate-gbqc_dep.csv").read_text()
    assert text.startswith("p,scenario,observable,value,stderr\n")
    assert "hellinger" in text


def test_run_json_includes_density_matrix(tmp_path):
    assert main(["run", "bell-gbqc", "-p", "0", "--samples", "1", "--format", "json", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "bell-gbqc_both.json").read_text())
    assert doc["meta"]["density_matrix"]["rho"][0][0]["re"] == pytest.approx(0.5)


def test_config_errors(tmp_path):
    assert main(["run", "nothing"]) == 2
    assert main(["run", "xgate-gbqc", "-p", "0.6", "--out", str(tmp_path)]) == 2
    assert main(["run", "xgate-gbqc", "--samples", "0", "--out", str(tmp_path)]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"experiment": "xgate-gbqc"}')
    assert main(["sweep", str(bad), "--out", str(tmp_path)]) == 2
    assert main(["sweep", str(tmp_path / "missing.json")]) == 2
    assert main([]) == 2


def test_simulation_error_exit_code(tmp_path, monkeypatch):
    from noisyoptics import analysis

    def boom(*a, **k):
        raise RuntimeError("kaput")

    monkeypatch.setattr(analysis, "simulate", boom)
    assert main(["run", "xgate-gbqc", "--out", str(tmp_path)]) == 3


def test_sweep_bit_identical_across_threads(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"experiment": "xgate-gbqc", "noise_type": "both", "probabilities": [0.001, 0.01]}))
    outs = []
    for threads in ("1", "4"):
        out = tmp_path / f"t{threads}"
        assert main(["sweep", str(spec), "--samples", "1500", "--seed", "7", "--threads", threads, "--out", str(out)]) == 0
        outs.append((out / "sweep_xgate-gbqc_both.csv").read_bytes())
    assert outs[0] == outs[1]


def test_vqa_command(tmp_path):
    cfg = tmp_path / "vqa.json"
    cfg.write_text(json.dumps({"scenarios": ["none", "dep"], "probabilities": [0.01], "restarts": 1, "max_iters": 30, "n_samples": 50}))
    assert main(["vqa", str(cfg), "--out", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "vqa_summary.json").read_text())
    assert {r["scenario"] for r in summary["runs"]} == {"none", "dep"}
    trace = (tmp_path / "trace_dep_p0.01_r0.csv").read_text().splitlines()
    assert trace[0] == "step,energy,relative_error" and len(trace) > 1


def test_validate_command(tmp_path, capsys):
    assert main(["validate", "--samples", "20000", "--out", str(tmp_path)]) == 0
    assert capsys.readouterr().out.count("PASS") == 6
