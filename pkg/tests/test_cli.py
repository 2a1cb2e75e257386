import csv
import json

import numpy as np
import pytest

from ghsv.cli import main
from ghsv.inference.sampler import LatentState, ThetaParams


def write_config(path, **blocks):
    cfg = {"schema_version": 1, "model": {"lam": 1.0, "alpha": -1.0, "b": 1.0, "mu": 0.05, "beta": 0.2},
           "simulate": {"n": 20, "seed": 3}, "mcmc": {"iters": 500, "burnin": 20, "seed": 1},
           "output": {"dir": "out"}}
    for k, v in blocks.items():
        cfg[k] = {**cfg.get(k, {}), **v}
    path.write_text(json.dumps(cfg))
    return str(path)


def rows(path):
    with open(path) as fh:
        return [r for r in csv.reader(line for line in fh if not line.startswith("#"))]


def test_simulate_files_and_determinism(tmp_path):
    cfg = write_config(tmp_path / "c.json")
    assert main(["simulate", "--config", cfg]) == 0
    out = tmp_path / "out"
    assert len(rows(out / "returns.csv")) == 21
    assert len(rows(out / "latents.csv")) == 21
    assert json.loads((out / "manifest.json").read_text())["n"] == 20
    first = (out / "returns.csv").read_bytes()
    assert main(["simulate", "--config", cfg, "--out-dir", str(tmp_path / "again")]) == 0
    assert (tmp_path / "again" / "returns.csv").read_bytes() == first
    assert main(["simulate", "--config", cfg, "--seed", "99", "--out-dir", str(tmp_path / "other")]) == 0
    assert (tmp_path / "other" / "returns.csv").read_bytes() != first


def test_invalid_parameters_exit_2(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.json", model={"alpha": 0.5, "b": -1.0})
    assert main(["simulate", "--config", cfg]) == 2
    err = capsys.readouterr().err
    assert "0 < alpha < 1" in err and "alpha <= 0" in err
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"schema_version": 7}))
    assert main(["simulate", "--config", str(bad)]) == 2
    assert main(["simulate", "--config", str(tmp_path / "missing.json")]) == 2
    assert main(["frobnicate"]) == 2


def test_fit_and_predict(tmp_path):
    cfg = write_config(tmp_path / "c.json")
    assert main(["simulate", "--config", cfg]) == 0
    data = str(tmp_path / "out" / "returns.csv")
    assert main(["fit", "--config", cfg, "--data", data]) == 0
    out = tmp_path / "out"
    assert len(rows(out / "trace.csv")) == 501
    summary = json.loads((out / "summary.json").read_text())
    assert set(summary["parameters"]) >= {"mu", "beta", "b", "lam", "alpha"}
    assert summary["parameters"]["mu"]["ess"] > 0
    assert main(["predict", "--config", cfg, "--trace", str(out / "trace.csv"),
                 "--grid", "-300,300,3001"]) == 0
    text = (out / "predictive.csv").read_text()
    integral = float(text.split("# grid_integral=")[1].split()[0])
    assert 0.98 <= integral <= 1.02
    body = np.array(rows(out / "predictive.csv")[1:], dtype=float)
    assert body.shape == (3001, 3) and np.all(body[:, 1] >= 0)


def test_fit_two_chains(tmp_path):
    cfg = write_config(tmp_path / "c.json", mcmc={"iters": 10, "burnin": 2, "chains": 2})
    assert main(["simulate", "--config", cfg]) == 0
    assert main(["fit", "--config", cfg, "--data", str(tmp_path / "out" / "returns.csv")]) == 0
    a = (tmp_path / "out" / "trace_chain0.csv").read_text()
    b = (tmp_path / "out" / "trace_chain1.csv").read_text()
    assert len(a.splitlines()) == len(b.splitlines()) == 11
    assert a != b


def test_fit_missing_data(tmp_path):
    cfg = write_config(tmp_path / "c.json")
    assert main(["fit", "--config", cfg, "--data", str(tmp_path / "nope.csv")]) == 2
    assert main(["fit", "--config", cfg]) == 2


def test_predict_empty_trace_and_symmetry(tmp_path):
    cfg = write_config(tmp_path / "c.json", model={"mu": 0.0, "beta": 0.0})
    empty = tmp_path / "empty.csv"
    empty.write_text("iter,mu,beta\n")
    (tmp_path / "empty.states.jsonl").write_text("")
    assert main(["predict", "--config", cfg, "--trace", str(empty), "--grid", "-5,5,11"]) == 2
    gen = np.random.default_rng(0)
    states = []
    for _ in range(3):
        st = LatentState(w=gen.exponential(size=4), mu=0.0, betas=(0.0,), theta=ThetaParams(-1.0, 1.0, 1.0),
                         m=np.array([2, 1, 1, 0]), jumps=gen.exponential(size=3),
                         locations=np.array([0.5, 1.5, 2.5]))
        states.append(json.dumps(st.to_json()))
    tr = tmp_path / "t.csv"
    tr.write_text("iter,mu,beta\n1,0.0,0.0\n2,0.0,0.0\n3,0.0,0.0\n")
    (tmp_path / "t.states.jsonl").write_text("\n".join(states) + "\n")
    assert main(["predict", "--config", cfg, "--trace", str(tr), "--grid", "-20,20,401", "--horizon", "0.5"]) == 0
    body = np.array(rows(tmp_path / "out" / "predictive.csv")[1:], dtype=float)
    np.testing.assert_allclose(body[:, 1], body[::-1, 1], rtol=1e-8, atol=1e-15)


def test_validate_command(capsys):
    assert main(["validate", "--suite", "equivalence", "--n", "4"]) == 0
    assert main(["validate", "--suite", "combinatorics"]) == 0
    assert main(["validate", "--suite", "nonsense"]) == 2
    assert "available" in capsys.readouterr().err
