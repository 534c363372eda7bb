import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from ouwind import cli
from ouwind.core import OuParams
from ouwind.harness import experiments as ex
from ouwind.harness.stats import EmpiricalDist, ks_critical, ks_distance, ks_two_sample, median_se


def uniform_cdf(x):
    return np.clip(np.asarray(x, dtype=float), 0.0, 1.0)


@given(st.integers(2, 2000))
def test_ks_quantile_matched(n):
    x = (np.arange(n) + 0.5) / n
    assert ks_distance(EmpiricalDist(x), uniform_cdf) <= 0.5 / n + 1e-15


def test_ks_degenerate():
    d = EmpiricalDist(np.full(100, 0.3))
    assert ks_distance(d, uniform_cdf) == pytest.approx(0.7)


def test_ks_uniform_draws():
    x = np.random.default_rng(0).random(100_000)
    assert ks_distance(EmpiricalDist(x), uniform_cdf) <= 0.01


@settings(max_examples=30)
@given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=200))
def test_ks_matches_scipy(xs):
    x = np.array(xs)
    ref = stats.kstest(x, stats.norm.cdf).statistic
    assert ks_distance(EmpiricalDist(x), stats.norm.cdf) == pytest.approx(ref, abs=1e-12)


def test_empirical_dist():
    with pytest.raises(ValueError):
        EmpiricalDist([1.0])
    with pytest.raises(ValueError):
        EmpiricalDist([1.0, np.nan])
    d = EmpiricalDist([3.0, 1.0, np.inf, 2.0])
    assert list(d.samples[:3]) == [1.0, 2.0, 3.0] and d.n == 4
    assert d.quantile(0.5) == 2.0 and d.quantile(1.0) == np.inf
    assert ks_distance(d, lambda v: np.minimum(np.asarray(v) / 4, 1.0)) == pytest.approx(0.25)
    assert ks_critical(10_000) == pytest.approx(1.6276 / 100, rel=1e-3)
    assert median_se(EmpiricalDist(np.arange(100.0)), 0.5) == pytest.approx(0.1)
    assert ks_two_sample([0, 1, 2], [0, 1, 2]) == 0.0


def test_config_round_trip_and_schema():
    cfg = ex.default_config("SPITZER", n_paths=10, seed=3)
    d = ex.config_to_json(cfg)
    back = ex.config_from_json(json.loads(json.dumps(d)))
    assert back == cfg
    import jsonschema
    with pytest.raises(jsonschema.ValidationError):
        ex.validate_config({"experiment": "NOPE"})
    with pytest.raises(jsonschema.ValidationError):
        ex.validate_config({"experiment": "SPITZER", "params": {"lambda": -1}})


def test_every_experiment_has_a_runner():
    assert set(ex.RUNNERS) == set(ex.Experiment)


def test_run_all_empty():
    summary, code = ex.run_all([])
    assert code == 0 and summary["summary"]["experiments"] == 0


def _fake(passed):
    def run(cfg):
        return ex._report(cfg, {}, {}, [ex.gate("fake gate", 1.0, 0.5, passed)])
    return run


def test_run_all_failure_named(monkeypatch, tmp_path):
    monkeypatch.setitem(ex.RUNNERS, ex.Experiment.CLOSED_FORM, _fake(False))
    summary, code = ex.run_all([ex.default_config("CLOSED_FORM")], out=tmp_path / "r.jsonl")
    assert code != 0
    assert summary["summary"]["failed"] == ["CLOSED_FORM: fake gate"]


def test_run_all_deterministic_bytes(tmp_path):
    cfgs = [ex.default_config("CLOSED_FORM"), ex.default_config("TIME_CHANGE", n_paths=2, horizon=1.0)]
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    ex.run_all(cfgs, out=a)
    ex.run_all(cfgs, out=b)
    la, lb = a.read_text().splitlines(), b.read_text().splitlines()
    assert "timestamp" in la[0] and la[1:] == lb[1:]
    assert json.loads(la[-1])["summary"]["passed"]


def test_real_failing_gate_gives_nonzero_exit():
    # stationary P(|log R| > 2) = 1 - exp(-e^{-4}) = 0.018 exceeds the 0.01 tripwire
    cfg = ex.default_config("RADIAL_LARGE", n_paths=20_000)
    rep = ex.run_experiment(cfg)
    assert not rep["passed"]
    assert rep["estimates"]["p_exact"][-1] == pytest.approx(1 - math.exp(-math.exp(-4)), rel=1e-3)
    assert ex.run_all([cfg])[1] == 1


def test_interval_scale():
    # alpha(T) = alpha(1) / alpha(t0)
    lam, t0 = 1.0, 0.1
    s = ex.interval_scale(t0, lam)
    assert math.expm1(2 * s) / 2 == pytest.approx(math.expm1(2) / math.expm1(0.2), rel=1e-12)


# ---------------------------------------------------------------- CLI

def test_cli_analytic(capsys):
    assert cli.main(["analytic", "cauchy-cdf", "--x", "2", "--scale", "2"]) == 0
    assert json.loads(capsys.readouterr().out)["value"] == pytest.approx(0.75)
    assert cli.main(["analytic", "sinh2-closed", "--c", "0.3"]) == 0
    assert json.loads(capsys.readouterr().out)["value"] == pytest.approx((1 / math.cos(0.6) - 1) / 2)
    assert cli.main(["analytic", "levy-constants", "--alpha", "1"]) == 0
    capsys.readouterr()


def test_cli_simulate(tmp_path):
    out = tmp_path / "p.csv"
    assert cli.main(["simulate", "path", "--t", "0.1", "--step", "0.01", "--format", "csv", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "t,re,im" and len(lines) == 12
    out2 = tmp_path / "tr.csv"
    assert cli.main(["simulate", "trace", "--t", "0.1", "--format", "csv", "--out", str(out2)]) == 0
    assert out2.read_text().startswith("t,theta,log_r,theta_plus,theta_minus")
    out3 = tmp_path / "e.csv"
    assert cli.main(["simulate", "exits", "--c", "0.3", "--paths", "20", "--format", "csv", "--out", str(out3)]) == 0
    assert len(out3.read_text().splitlines()) == 21
    assert cli.main(["simulate", "path", "--kind", "ousp", "--t", "0.1", "--out", str(tmp_path / "o.json")]) == 0


def test_cli_verify_and_report(tmp_path, capsys):
    out = tmp_path / "v.jsonl"
    assert cli.main(["verify", "CLOSED_FORM", "--out", str(out)]) == 0
    assert cli.main(["report", str(out)]) == 0
    assert "PASS" in capsys.readouterr().out
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps(ex.config_to_json(ex.default_config("RADIAL_LARGE", n_paths=20_000))))
    assert cli.main(["verify", "RADIAL_LARGE", "--config", str(cfg), "--out", str(out)]) == 1
    assert cli.main(["report", str(out)]) == 1
