import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from tailrisk import EmpiricalDistribution, cvar, divergence_risk, make_divergence
from tailrisk.cli import main
from tailrisk.riskspec import RiskSpec, evaluate


def _csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return str(path)


def _run(capsys, *argv):
    code = main([str(a) for a in argv])
    cap = capsys.readouterr()
    return code, cap.out, cap.err


@pytest.fixture
def sample(tmp_path):
    return _csv(tmp_path / "x.csv", ["x"], [[v] for v in [0.5, -1.0, 3.0, 2.0, 2.0, 7.0]])


def test_eval_cvar_matches_library(capsys, sample):
    code, out, _ = _run(capsys, "eval", sample, "--risk", "cvar", "--alpha", "0.5")
    assert code == 0
    obj = json.loads(out)
    d = EmpiricalDistribution.from_samples([0.5, -1.0, 3.0, 2.0, 2.0, 7.0])
    assert obj["value"] == pytest.approx(cvar(d, 0.5), rel=1e-14)
    assert obj["diagnostics"]["n"] == 6


def test_eval_floats_round_trip(capsys, sample):
    _, out, _ = _run(capsys, "eval", sample, "--risk", "kl", "--epsilon", "0.3")
    d = EmpiricalDistribution.from_samples([0.5, -1.0, 3.0, 2.0, 2.0, 7.0])
    ref = divergence_risk(d, make_divergence("kl", 0.3)).value
    assert json.loads(out)["value"] == ref
    assert ("%.17g" % ref) in out


def test_eval_weights_column(capsys, tmp_path):
    path = _csv(tmp_path / "w.csv", ["x", "w"], [[1.0, 1.0], [4.0, 3.0]])
    _, out, _ = _run(capsys, "eval", path, "--risk", "expectation")
    assert json.loads(out)["value"] == pytest.approx(3.25)


@pytest.mark.parametrize("measure", ["regret", "spectral", "tm"])
def test_eval_measures(capsys, sample, measure):
    code, out, _ = _run(capsys, "eval", sample, "--risk", "chi2", "--measure", measure)
    assert code == 0
    d = EmpiricalDistribution.from_samples([0.5, -1.0, 3.0, 2.0, 2.0, 7.0])
    assert json.loads(out)["value"] == pytest.approx(evaluate(d, RiskSpec("chi2", measure=measure)).value,
                                                     rel=1e-15)


@pytest.mark.parametrize("rows", [[["x"], ["abc"]], [["y"], ["1"]], [["x"], ["inf"]], [["x"]]])
def test_bad_input_exit_2(capsys, tmp_path, rows):
    path = tmp_path / "bad.csv"
    path.write_text("\n".join(",".join(r) for r in rows) + "\n")
    code, _, err = _run(capsys, "eval", path, "--risk", "kl")
    assert code == 2 and "input error" in err


def test_missing_file_exit_2(capsys, tmp_path):
    code, _, _ = _run(capsys, "eval", tmp_path / "nope.csv", "--risk", "kl")
    assert code == 2


def test_bad_spec_exit_3(capsys, sample, tmp_path):
    spec = tmp_path / "s.json"
    spec.write_text(json.dumps({"family": "kl", "epsilon": -1}))
    assert _run(capsys, "eval", sample, "--spec", spec)[0] == 3
    spec.write_text(json.dumps({"family": "kl", "colour": "red"}))
    assert _run(capsys, "eval", sample, "--spec", spec)[0] == 3
    spec.write_text("{not json")
    assert _run(capsys, "eval", sample, "--spec", spec)[0] == 3
    assert _run(capsys, "eval", sample)[0] == 3


def test_construct_round_trips_into_eval(capsys, sample, tmp_path):
    out = tmp_path / "pareto.json"
    code, _, _ = _run(capsys, "construct", "--reference", "pareto:2", "--out", out)
    assert code == 0
    obj = json.loads(out.read_text())
    assert obj["family"] == "custom"
    assert obj["meta"]["coincidence"] is False and obj["meta"]["check"] == "ok"
    code, res, _ = _run(capsys, "eval", sample, "--spec", out)
    assert code == 0
    direct = evaluate(EmpiricalDistribution.from_samples([0.5, -1.0, 3.0, 2.0, 2.0, 7.0]),
                      RiskSpec.from_dict(obj)).value
    assert json.loads(res)["value"] == direct


def test_construct_exponential_coincides(capsys):
    code, out, _ = _run(capsys, "construct", "--reference", "exponential")
    assert code == 0 and json.loads(out)["meta"]["coincidence"] is True


def test_construct_rejects_invalid_reference(capsys, tmp_path):
    code, _, err = _run(capsys, "construct", "--reference", "neglog")
    assert code == 3 and "rejected" in err
    assert _run(capsys, "construct", "--reference", "constant:2")[0] == 3


def test_construct_from_table_file(capsys, tmp_path):
    t = np.logspace(-8, 0, 60)
    ref = tmp_path / "ref.json"
    ref.write_text(json.dumps([[float(a), float(a ** -0.5)] for a in t]))
    code, out, _ = _run(capsys, "construct", "--reference", ref)
    assert code == 0 and json.loads(out)["meta"]["reference"] == "ref.json"


def test_compare_sandwich(capsys, sample):
    code, out, _ = _run(capsys, "compare", sample, "--fundamental", "sqrt")
    obj = json.loads(out)
    assert code == 0 and obj["sandwich_ok"] and obj["tm_le_lorentz"]
    assert obj["marcinkiewicz_quasi"] <= obj["marcinkiewicz"] <= obj["orlicz"] * (1 + 1e-9)


def test_compare_needs_majorant_for_lexp(capsys, sample):
    assert _run(capsys, "compare", sample, "--fundamental", "lexp")[0] == 3
    code, out, _ = _run(capsys, "compare", sample, "--fundamental", "lexp", "--majorant")
    assert code == 0 and json.loads(out)["sandwich_ok"]


def test_deviation_command(capsys, tmp_path):
    path = _csv(tmp_path / "pos.csv", ["x"], [[v] for v in [0.1, 0.5, 1.0, 2.0, 4.0]])
    code, out, _ = _run(capsys, "deviation", path, "--young", "x2", "--points", "5")
    obj = json.loads(out)
    assert code == 0 and obj["passed"] and len(obj["rows"]) == 5
    code, out, _ = _run(capsys, "deviation", path, "--reference", "pareto:2")
    assert code == 0 and "reference_bound" in json.loads(out)["rows"][-1]
    assert _run(capsys, "deviation", path)[0] == 3
    assert _run(capsys, "deviation", path, "--young", "cosh")[0] == 3


def test_train_command(capsys, tmp_path, rng):
    X = rng.normal(size=(100, 2))
    y = X @ [2.0, -1.0] + 0.5
    data = _csv(tmp_path / "d.csv", ["a", "b", "y"], np.column_stack([X, y]).tolist())
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"risk": {"family": "expectation"}, "step_size": 0.2, "max_epochs": 3000,
                               "tolerance": 1e-16}))
    hist = tmp_path / "h.csv"
    code, out, _ = _run(capsys, "train", data, cfg, "--history", hist)
    obj = json.loads(out)
    assert code == 0 and obj["features"] == ["a", "b"]
    assert np.allclose(obj["weights"], [2.0, -1.0], atol=1e-6) and obj["bias"] == pytest.approx(0.5, abs=1e-6)
    assert hist.read_text().startswith("epoch,objective")
    cfg.write_text(json.dumps({"risk": {"family": "kl"}, "momentum": 0.9}))
    assert _run(capsys, "train", data, cfg)[0] == 3
    cfg.write_text(json.dumps({"risk": {"family": "kl"}, "loss": "hinge"}))
    assert _run(capsys, "train", data, cfg)[0] == 3


def test_plotdata(capsys, tmp_path):
    out = tmp_path / "p.csv"
    code, _, _ = _run(capsys, "plotdata", "--fundamental", "sqrt", "chi2", "--points", "10", "--out", out)
    rows = list(csv.reader(out.open()))
    assert code == 0 and rows[0] == ["t", "sqrt", "chi2"] and len(rows) == 11
    t, s = float(rows[3][0]), float(rows[3][1])
    assert s == np.sqrt(t)


def test_console_entry_point(sample):
    proc = subprocess.run([sys.executable, "-m", "tailrisk.cli", "eval", sample, "--risk", "expectation"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["value"] == pytest.approx(13.5 / 6)
