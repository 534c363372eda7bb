import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ouwind.core import (OuParams, SeedSpec, TimeGrid, alpha_inverse, alpha_time, arg_increment,
                         arg_increments, ou_variance, scaling_factor,
                         scaling_factor_printed)


def test_alpha_examples():
    assert alpha_time(1.0, 0.5) == pytest.approx(math.e - 1, rel=1e-15)
    assert alpha_inverse(math.e - 1, 0.5) == pytest.approx(1.0, rel=1e-15)
    assert alpha_inverse(7.0, 0.0) == 7.0
    assert alpha_time(7.0, 0.0) == 7.0


@given(st.floats(1e-6, 20.0), st.floats(1e-6, 5.0))
def test_alpha_round_trip(t, lam):
    assert alpha_inverse(alpha_time(t, lam), lam) == pytest.approx(t, rel=1e-12)


def test_alpha_small_lambda_continuous():
    assert alpha_time(2.0, 1e-13) == pytest.approx(2.0, rel=1e-12)
    assert alpha_inverse(2.0, 1e-13) == pytest.approx(2.0, rel=1e-12)


def test_alpha_overflow_is_inf():
    assert np.isinf(alpha_time(1e4, 1.0))


def test_arg_increment_examples():
    assert arg_increment(1, 1j) == pytest.approx(math.pi / 2)
    assert arg_increment(1 + 1j, 2 + 2j) == pytest.approx(0.0, abs=1e-15)
    assert arg_increment(1, -1 + 1e-9j) == pytest.approx(math.pi, abs=1e-8)


def test_arg_increment_zero_point():
    from ouwind.errors import ZeroPoint
    with pytest.raises(ZeroPoint):
        arg_increment(0.0, 1.0)


def test_arg_increments_full_turn():
    z = np.exp(1j * np.linspace(0, 2 * math.pi, 65))
    assert np.sum(arg_increments(z)) == pytest.approx(2 * math.pi, abs=1e-12)


def test_scaling_factor_printed_examples():
    lam, t = 0.7, 1.3
    assert scaling_factor_printed(1.0, t, lam) == pytest.approx(math.exp(-2 * lam * t), rel=1e-14)
    direct = math.exp(-1.5) / math.sqrt(2) * math.sqrt((math.e ** 2 - 1) / (math.e - 1))
    assert scaling_factor_printed(2.0, 1.0, 0.5) == pytest.approx(direct, rel=1e-14)
    lim = math.sqrt(2 * lam * t / math.expm1(2 * lam * t)) * math.exp(-lam * t)
    assert scaling_factor_printed(1e-8, t, lam) == pytest.approx(lim, rel=1e-6)


def test_scaling_factor_matches_marginal_variance():
    # OU from 0: per-coordinate variance v(s) = (1 - exp(-2 lam s)) / (2 lam)
    lam = 0.7
    for a, t in [(1.0, 1.3), (2.0, 0.4), (0.3, 2.0)]:
        k = scaling_factor(a, t, lam)
        assert k * k * ou_variance(t, lam) == pytest.approx(ou_variance(a * t, lam), rel=1e-12)
    assert scaling_factor(1.0, 1.3, lam) == pytest.approx(1.0, rel=1e-15)


def test_scaling_factor_in_law(gen):
    from scipy.stats import ks_2samp
    from ouwind.simulate import ou_marginal
    lam, a, t, n = 0.7, 2.5, 0.8, 50_000
    lhs = ou_marginal(a * t, lam, 0.0, n, gen).real
    rhs = scaling_factor(a, t, lam) * ou_marginal(t, lam, 0.0, n, gen).real
    assert ks_2samp(lhs, rhs).pvalue > 1e-3
    wrong = scaling_factor_printed(a, t, lam) * ou_marginal(t, lam, 0.0, n, gen).real
    assert ks_2samp(lhs, wrong).pvalue < 1e-6


def test_ou_variance():
    assert ou_variance(2.0, 0.0) == 2.0
    assert ou_variance(1e3, 0.5) == pytest.approx(1.0, rel=1e-12)


def test_params_validation():
    with pytest.raises(ValueError):
        OuParams(-1.0)
    with pytest.raises(ValueError):
        OuParams(1.0, 0.0)
    with pytest.raises(ValueError):
        OuParams(1.0, 1.0, 2.5)
    p = OuParams(2.0, 1 + 1j, 1.5)
    assert OuParams.from_dict(p.to_dict()) == p


def test_grid_validation():
    with pytest.raises(ValueError):
        TimeGrid(np.array([0.0]))
    with pytest.raises(ValueError):
        TimeGrid(np.array([0.1, 0.2]))
    with pytest.raises(ValueError):
        TimeGrid(np.array([0.0, 0.2, 0.2]))
    g = TimeGrid.uniform(1.0, 0.3)
    assert g.t[-1] == 1.0 and len(g) == 5
    assert TimeGrid.for_ou(1.0, 10.0).steps.max() <= 1e-3 + 1e-15
    geo = TimeGrid.geometric(100.0)
    assert geo.horizon == 100.0


def test_seed_spec_streams():
    a = SeedSpec(7, 3).generator(0).standard_normal(5)
    b = SeedSpec(7, 3).generator(0).standard_normal(5)
    c = SeedSpec(7, 4).generator(0).standard_normal(5)
    d = SeedSpec(7, 3).generator(1).standard_normal(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c) and not np.array_equal(a, d)
