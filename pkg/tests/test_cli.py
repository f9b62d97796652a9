import json
import subprocess
import sys

import pytest

from optfwer.cli import EXIT_DATA, EXIT_NOT_CONVERGED, EXIT_USAGE, main
from optfwer.harness import load_fixture
from optfwer.optimizer import load_fit, save_fit


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_usage(capsys, *argv):
    with pytest.raises(SystemExit) as exc:
        main(list(argv))
    capsys.readouterr()
    return exc.value.code


def p_arg(name):
    return ",".join(str(s["p"]) for s in load_fixture(name)["studies"])


def test_fit_writes_json(capsys, tmp_path):
    out = tmp_path / "mu.json"
    code, text, _ = run(capsys, "fit", "--k", "3", "--alpha", "0.05", "--model", "trunc:-2.0", "--seed", "7",
                        "--n-opt", "20000", "--out", str(out))
    assert code == 0 and "converged" in text
    fitted = load_fit(out)
    assert fitted.converged and fitted.K == 3 and fitted.config.seed == 7


def test_fit_alpha_one(capsys, tmp_path):
    out = tmp_path / "mu.json"
    code, _, _ = run(capsys, "fit", "--k", "4", "--alpha", "1.0", "--model", "beta:0.5", "--n-opt", "2000",
                     "--out", str(out))
    assert code == 0 and load_fit(out).mu_hat.mu == (0.0,) * 4


def test_fit_non_convergence_exit(capsys, tmp_path):
    code, text, _ = run(capsys, "fit", "--k", "4", "--model", "trunc:-2.0", "--n-opt", "3000", "--t-max", "1",
                        "--out", str(tmp_path / "mu.json"))
    assert code == EXIT_NOT_CONVERGED and "NOT" in text


def test_fit_usage_errors(capsys, tmp_path):
    out = str(tmp_path / "mu.json")
    assert run(capsys, "fit", "--k", "1", "--model", "beta:0.5", "--out", out)[0] == EXIT_USAGE
    assert run(capsys, "fit", "--k", "3", "--model", "beta:0.5", "--alpha", "0", "--out", out)[0] == EXIT_USAGE
    assert run_usage(capsys, "fit", "--k", "3", "--model", "beta:7", "--out", out) == EXIT_USAGE
    assert run_usage(capsys, "fit", "--k", "3", "--model", "beta:0.5", "--bogus", "--out", out) == EXIT_USAGE
    assert run_usage(capsys) == EXIT_USAGE


@pytest.fixture(scope="module")
def camerer_mu(tmp_path_factory, fit_cache):
    path = tmp_path_factory.mktemp("cli") / "camerer.json"
    save_fit(fit_cache("beta:0.5", 6), path)
    return path


def test_apply_camerer_rejects_all(capsys, camerer_mu):
    code, text, _ = run(capsys, "apply", "--mu", str(camerer_mu), "--p", p_arg("camerer"))
    lines = text.strip().splitlines()
    assert code == 0
    assert [line.split("\t")[-1] for line in lines[:6]] == ["REJECT"] * 6
    assert lines[-1] == "l* = 6"


def test_apply_osc_retains_all(capsys, fit_cache, tmp_path):
    path = tmp_path / "osc.json"
    save_fit(fit_cache("beta:0.6", 6), path)
    code, text, _ = run(capsys, "apply", "--mu", str(path), "--p", p_arg("osc"))
    assert code == 0
    assert [line.split("\t")[-1] for line in text.strip().splitlines()[:6]] == ["RETAIN"] * 6


def test_apply_usage_errors(capsys, camerer_mu):
    assert run(capsys, "apply", "--mu", str(camerer_mu), "--p", "0.5")[0] == EXIT_USAGE
    assert run(capsys, "apply", "--p", "0.1,0.2")[0] == EXIT_USAGE
    assert run(capsys, "apply", "--model", "beta:0.5", "--k", "3", "--p", "0.1,0.2")[0] == EXIT_USAGE
    assert run(capsys, "apply", "--mu", str(camerer_mu), "--p", "0,0.1,0.1,0.1,0.1,0.1")[0] == EXIT_USAGE
    assert run_usage(capsys, "apply", "--mu", str(camerer_mu), "--p", "a,b") == EXIT_USAGE


def test_apply_bad_fit_document(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "apply", "--mu", str(bad), "--p", "0.1,0.2")[0] == EXIT_DATA
    bad.write_text(json.dumps({"K": 2}))
    assert run(capsys, "apply", "--mu", str(bad), "--p", "0.1,0.2")[0] == EXIT_DATA


def test_experiment(capsys, tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"K": 3, "model": "beta:0.5", "n_eval": 3000, "n_opt": 3000}))
    out = tmp_path / "res.csv"
    code, text, _ = run(capsys, "experiment", "--spec", str(spec), "--out", str(out))
    assert code == 0 and "hommel" in text
    assert out.read_text().startswith("table,K,alpha,model,param,method,metric,value,se,seed")


def test_experiment_malformed(capsys, tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text('{"K": 3, "model": ')
    code, _, err = run(capsys, "experiment", "--spec", str(spec), "--out", str(tmp_path / "x.csv"))
    assert code == EXIT_DATA and "malformed JSON" in err
    spec.write_text(json.dumps({"K": 3, "model": "beta:9"}))
    assert run(capsys, "experiment", "--spec", str(spec), "--out", str(tmp_path / "x.csv"))[0] == EXIT_DATA
    missing = str(tmp_path / "missing.json")
    assert run(capsys, "experiment", "--spec", missing, "--out", str(tmp_path / "x.csv"))[0] == EXIT_DATA


def test_table(capsys, tmp_path):
    out = tmp_path / "t1.csv"
    code, text, _ = run(capsys, "table", "--id", "scaling", "--k", "3", "--n-eval", "2000", "--n-opt", "2000",
                        "--out", str(out))
    assert code == 0 and "wrote" in text and out.exists()
    assert run_usage(capsys, "table", "--id", "nope", "--out", str(out)) == EXIT_USAGE


def test_hierarchical(capsys, tmp_path):
    doc = tmp_path / "groups.json"
    doc.write_text(json.dumps({"alpha": 0.05, "groups": [
        {"name": "A", "model": "trunc:-2.0", "p": [0.002, 0.005]},
        {"name": "B", "model": "trunc:-2.0", "p": [0.19, 0.50, 0.99]},
    ]}))
    code, text, _ = run(capsys, "--cache-dir", str(tmp_path), "hierarchical", "--groups", str(doc),
                        "--n-opt", "20000")
    assert code == 0
    assert "group A (alpha=0.025): l* = 2" in text and "group B (alpha=0.025): l* = 0" in text
    doc.write_text(json.dumps({"groups": [{"name": "A", "p": [0.1, 0.2]}]}))
    assert run(capsys, "hierarchical", "--groups", str(doc))[0] == EXIT_DATA


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "optfwer", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "hierarchical" in proc.stdout
