import csv
import io
import json
import os
import subprocess
import sys

import pytest
from hypothesis import given
from hypothesis import strategies as st

from klim.cli import main
from klim.config import ExperimentConfig
from klim.errors import RegimeMismatchError, SpecError
from klim.integrate import PathBundle
from klim.model import DriftSpec, ModelSpec
from klim.suites import default_config, run_suite

ZERO = ["--f-plus", "0", "--f-minus", "0"]


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


@given(st.floats(1e-4, 1.0), st.integers(1, 10**6), st.integers(0, 2**63), st.lists(st.floats(0.1, 50), min_size=1,
       max_size=4), st.sampled_from(["json", "csv"]), st.one_of(st.none(), st.floats(0, 0.1)),
       st.floats(-2, 3), st.floats(0, 3))
def test_config_json_round_trip(eps, n, seed, t_eval, out, margin, beta, g):
    cfg = ExperimentConfig(ModelSpec(DriftSpec.power(1.0, g), beta), epsilon=eps, n_paths=n, seed=seed,
                           t_eval=tuple(t_eval), output=out, margin=margin)
    assert ExperimentConfig.from_json(cfg.to_json()) == cfg


@pytest.mark.parametrize("patch,field", [({"epsilon": 2.0}, "epsilon"), ({"n_paths": 0}, "n_paths"),
                                         ({"seed": -1}, "seed"), ({"bogus": 1}, "bogus"),
                                         ({"t_eval": []}, "t_eval"), ({"output": "xml"}, "output")])
def test_config_validation_names_field(patch, field):
    d = default_config("critical").to_dict()
    d.update(patch)
    with pytest.raises(SpecError) as exc:
        ExperimentConfig.from_dict(d)
    assert exc.value.field == field


def test_simulate_minimal_csv(capsys):
    code, out, _ = run(["simulate", *ZERO, "--paths", "10", "--steps", "5"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert sorted({int(r["path_id"]) for r in rows}) == list(range(10))
    assert len(rows) == 10 * 6 and "\r" not in out


def test_simulate_seed_repeatability(capsys):
    argv = ["simulate", "--paths", "20", "--steps", "30", "--seed", "5"]
    _, a, _ = run(argv, capsys)
    _, b, _ = run(argv, capsys)
    _, c, _ = run(argv[:-1] + ["6"], capsys)
    assert a == b and a != c


def test_simulate_binary(tmp_path, capsys):
    path = tmp_path / "paths.klim"
    code, _, _ = run(["simulate", "--paths", "4", "--steps", "8", "--binary", "--file", str(path)], capsys)
    assert code == 0
    b = PathBundle.from_bytes(path.read_bytes())
    assert b.v.shape == (4, 9)
    assert run(["simulate", "--binary"], capsys)[0] == 2


def test_bad_beta_type_in_config(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"model": {"beta": "abc"}}))
    code, _, err = run(["simulate", "--config", str(path)], capsys)
    assert code == 2 and "beta" in err


def test_config_file_overrides_flags(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"n_paths": 3}))
    _, out, _ = run(["simulate", "--paths", "10", "--steps", "2", "--config", str(path)], capsys)
    assert {r["path_id"] for r in csv.DictReader(io.StringIO(out))} == {"0", "1", "2"}


def test_invalid_flag_value(capsys):
    code, _, err = run(["simulate", "--eps", "2"], capsys)
    assert code == 2 and "epsilon" in err


def test_regime_mismatch_cites_q(capsys):
    code, _, err = run(["verify", "critical", "--beta", "2"], capsys)
    assert code == 2 and "q=1" in err
    with pytest.raises(RegimeMismatchError):
        run_suite("subcritical", default_config("critical"))


def test_verify_gronwall_json_layout(capsys):
    code, out, _ = run(["verify", "gronwall"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert list(doc) == ["regime", "parameters", "epsilon", "tests"]
    assert all(t["pass"] for t in doc["tests"])
    assert doc["tests"][0]["n"] == 100
    for t in doc["tests"]:
        assert list(t)[:4] == ["name", "statistic", "threshold", "pass"]


def test_json_and_csv_carry_the_same_statistics(capsys):
    argv = ["verify", "supercritical", "--eps", "0.05", "--paths", "2000"]
    _, js, _ = run(argv + ["--out", "json"], capsys)
    _, cs, _ = run(argv + ["--out", "csv"], capsys)
    tests = json.loads(js)["tests"]
    rows = list(csv.DictReader(io.StringIO(cs)))
    assert [r["name"] for r in rows] == [t["name"] for t in tests]
    for r, t in zip(rows, tests):
        assert float(r["statistic"]) == t["statistic"]
        assert float(r["threshold"]) == t["threshold"]
        assert (r["pass"] == "true") == t["pass"]


def test_threads_do_not_change_reports(capsys):
    argv = ["verify", "supercritical", "--eps", "0.05", "--paths", "5000"]
    _, one, _ = run(argv + ["--threads", "1"], capsys)
    _, many, _ = run(argv + ["--threads", "3"], capsys)
    assert one == many


def test_klim_threads_env(monkeypatch, capsys):
    argv = ["simulate", "--paths", "2100", "--steps", "3"]
    monkeypatch.setenv("KLIM_THREADS", "1")
    _, a, _ = run(argv, capsys)
    monkeypatch.setenv("KLIM_THREADS", "2")
    _, b, _ = run(argv, capsys)
    assert a == b


@pytest.mark.parametrize("flags,name,positive", [
    ([], "explosion_detected", True),
    (["--gamma", "2", "--rho", "1"], "no_exploded_paths", False),
    (["--f-plus", "0", "--f-minus", "0", "--gamma", "1"], "no_exploded_paths", False),
])
def test_explosion_prob(flags, name, positive, capsys):
    code, out, _ = run(["explosion-prob", "--paths", "300", "--steps", "2000", *flags], capsys)
    doc = json.loads(out)
    rep = doc["tests"][0]
    assert code == 0 and rep["name"] == name and rep["pass"]
    lo, hi = rep["metadata"]["wilson_95"]
    assert (lo > 0) == positive and (rep["metadata"]["fraction"] > 0) == positive


def test_sample_invariant_formats(capsys):
    _, text, _ = run(["sample-invariant", "--law", "pi", "--paths", "5"], capsys)
    _, table, _ = run(["sample-invariant", "--law", "pi", "--paths", "5", "--out", "csv"], capsys)
    assert table.splitlines()[0] == "sample"
    assert table.splitlines()[1:] == text.splitlines()
    assert len(text.splitlines()) == 5


def test_sample_invariant_non_dissipative_is_config_error(capsys):
    code, _, err = run(["sample-invariant", "--law", "lambda", "--rho", "-1"], capsys)
    assert code == 2


def test_module_entry_point():
    env = dict(os.environ, KLIM_THREADS="1")
    res = subprocess.run([sys.executable, "-m", "klim", "simulate", "--paths", "2", "--steps", "1"],
                         capture_output=True, text=True, env=env)
    assert res.returncode == 0 and res.stdout.startswith("path_id,t,v,x,exploded")
