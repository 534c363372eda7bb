import math

import numpy as np
import pytest
from scipy import stats

from ouwind import analytic, exit_cone as ec
from ouwind.core import OuParams, SeedSpec, TimeGrid
from ouwind.errors import Censored, DomainError
from ouwind.harness.stats import EmpiricalDist, ks_distance, mean_se
from ouwind.simulate import sample_bm, sample_real_ou
from ouwind.windings import track_winding


def test_transform_exit():
    assert ec.transform_exit(0.0, 1.0) == 0.0
    assert ec.transform_exit(3.0, 1e-14) == pytest.approx(3.0, rel=1e-12)
    t = np.array([0.1, 1.0, 10.0])
    assert np.array_equal(ec.transform_exit(t, 0.7), np.log1p(1.4 * t) / 1.4)


def test_exit_grid():
    g = ec.exit_grid(1e6, 1e-3, max_step=50.0)
    assert g.horizon == 1e6 and g.steps.max() <= 50.0 + 1e-9
    assert g.steps[0] == pytest.approx(1e-3)


def test_nested_exits_on_one_path():
    p = sample_bm(TimeGrid.uniform(20.0, 1e-3), 1.0, SeedSpec(3))
    th = np.abs(track_winding(p).theta)
    first = lambda c: int(np.argmax(th >= c)) if np.any(th >= c) else len(th)
    assert first(0.2) <= first(0.4)


def test_bm_first_moment_c03():
    c, n = 0.3, 20_000
    b = ec.exit_times_bm(c, ec.Boundary.DOUBLE, n, 4)
    assert not b.censored.any()
    m, se = mean_se(b.t_bm)
    assert abs(m - analytic.sinh2_moment_closed(c)) <= 3 * se


def test_bm_second_moment_c02():
    c, n = 0.2, 20_000
    b = ec.exit_times_bm(c, ec.Boundary.DOUBLE, n, 5)
    m, se = mean_se(3 * b.t_bm ** 2)
    assert abs(m - analytic.sinh4_moment_closed(c)) <= 3 * se


def test_expected_log_exit_mc():
    c, n = math.pi / 4, 20_000
    b = ec.exit_times_bm(c, ec.Boundary.DOUBLE, n, 6)
    x = np.log(np.where(b.censored, ec.default_bm_horizon(c, "DOUBLE"), b.t_bm))
    m, se = mean_se(x)
    # censored paths enter at the horizon, which can only lower the estimate
    assert abs(m - analytic.expected_log_exit_bm(c)) <= 3 * se + b.censored_fraction * 5


def test_small_c_law_ou():
    c, lam, n = 0.05, 1.0, 20_000
    b = ec.exit_times_ou(c, "DOUBLE", lam, n, 7, horizon=50 * c * c)
    ks = ks_distance(EmpiricalDist(b.t_ou / c ** 2), lambda s: analytic.two_sided_exit_cdf(s))
    assert ks < 1.63 / math.sqrt(n) + 0.01


def test_transform_matches_direct_ou():
    c, lam, n = 0.5, 1.0, 20_000
    a = ec.exit_times_bm(c, "DOUBLE", n, 8, lam=lam, stream_base=1)
    b = ec.exit_times_ou(c, "DOUBLE", lam, n, 8, stream_base=2)
    assert stats.ks_2samp(a.t_ou, b.t_ou).pvalue > 1e-3


def test_samples_and_sample_exit():
    s = ec.sample_exit_bm(0.3, "SINGLE", 100.0, 1e-3, SeedSpec(1, 2), lam=1.0)
    assert s.t_ou <= s.t_bm or s.censored
    b = ec.exit_times_bm(0.4, "DOUBLE", 10, 1)
    assert len(b.samples()) == 10


def test_hitting_times_level_law(gen):
    r, n = 2.0, 100_000
    t = ec.hitting_times_level(r, n, gen)
    ks = ks_distance(EmpiricalDist(t), lambda s: special_erfc(r / np.sqrt(2 * np.asarray(s))))
    assert ks < 1.63 / math.sqrt(n)


def special_erfc(x):
    from scipy.special import erfc
    return erfc(x)


def test_bougerol_scale_r2():
    r, n = 2.0, 20_000
    theta, t_hit = ec.bougerol_batch(r, 1.0, n, 9)
    a = math.asinh(r)
    d = EmpiricalDist(theta)
    # SE of a Cauchy quartile: sqrt(3/16/n) / f(q) with f(q) = 1/(2 pi a)
    se = math.sqrt(3 / 16 / n) * 2 * math.pi * a / math.sqrt(2)
    assert abs(d.half_iqr() - a) <= 3 * se
    assert abs(d.quantile(0.5)) <= 3 * math.pi * a / (2 * math.sqrt(n))
    assert np.all(t_hit > 0)


def test_real_ou_hitting_time():
    g = TimeGrid.uniform(5.0, 0.01)
    p = sample_real_ou(g, 1.0, SeedSpec(2), x0=0.0)
    t = ec.real_ou_hitting_time(p, 0.5)
    y = np.exp(p.grid.t) * p.xi
    if math.isfinite(t):
        k = int(round(t / 0.01))
        assert y[k] >= 0.5 and np.all(y[:k] < 0.5)


def test_lambda_asymptotics_domain():
    with pytest.raises(DomainError):
        ec.lambda_asymptotics(0.5, [0.1], 10, 1, branch="small")
    with pytest.raises(ValueError):
        ec.lambda_asymptotics(0.2, [0.1], 10, 1, branch="medium")


def test_large_c_samples_nonnegative():
    rows = ec.rescaled_exit_stats([3.0], 1.0, "LARGE_C", "DOUBLE", 300, 3)
    assert rows[0]["median"] >= 0
    with pytest.raises(ValueError):
        ec.rescaled_exit_stats([2.0, 1.0], 1.0, "LARGE_C", "DOUBLE", 10, 3)


def test_tail_limit_linear_in_c():
    # the limit 4c / pi doubles with c; check the estimator's ratio at moderate t
    a = ec.tail_probability(0.2, 1.0, 6.0, 40_000, 10)
    b = ec.tail_probability(0.4, 1.0, 6.0, 40_000, 11, stream_base=100)
    ratio = b["estimate"] / a["estimate"]
    se = ratio * math.hypot(a["se"] / a["estimate"], b["se"] / b["estimate"])
    assert abs(ratio - 2) <= 3 * se + 0.1
