import math

import numpy as np
import pytest
from scipy import integrate, stats

from ouwind import analytic
from ouwind.errors import DomainError


@pytest.mark.parametrize("s", [0.3, 1.0, 4.0])
def test_cauchy_cdf_quartiles(s):
    assert analytic.cauchy_cdf(0.0, s) == 0.5
    assert analytic.cauchy_cdf(s, s) == pytest.approx(0.75, abs=1e-15)
    assert analytic.cauchy_cdf(-s, s) == pytest.approx(0.25, abs=1e-15)
    x = np.linspace(-20, 20, 41)
    assert np.allclose(analytic.cauchy_cdf(x, s), stats.cauchy.cdf(x, scale=s), atol=1e-14)
    assert analytic.cauchy_quantile(0.75, s) == pytest.approx(s)


def test_reference_cdfs_against_scipy():
    x = np.linspace(0.01, 5, 50)
    assert np.allclose(analytic.normal_cdf(x, 2.0), stats.norm.cdf(x, scale=math.sqrt(2)))
    assert np.allclose(analytic.half_normal_cdf(x, 2.0), stats.halfnorm.cdf(x, scale=math.sqrt(2)))
    assert np.allclose(analytic.rayleigh_cdf(x, 2.0), stats.rayleigh.cdf(x, scale=math.sqrt(2)))
    assert np.allclose(analytic.exponential_cdf(x, 0.5), stats.expon.cdf(x, scale=0.5))
    assert np.allclose(analytic.half_cauchy_cdf(x, 1.0), stats.halfcauchy.cdf(x))
    # index-1/2 stable with E exp(-mu S) = exp(-sqrt(mu)) is Levy with scale 1/2
    assert np.allclose(analytic.levy_cdf(x), stats.levy.cdf(x, scale=0.5))


def test_two_sided_exit_cdf():
    t = np.array([0.05, 0.19, 0.2, 0.21, 1.0, 3.0])
    f = analytic.two_sided_exit_cdf(t)
    assert np.all(np.diff(f) > 0) and f[0] >= 0 and f[-1] < 1
    # the two series agree at the switch point
    lo = analytic.two_sided_exit_cdf(np.array([0.2 - 1e-12]))[0]
    hi = analytic.two_sided_exit_cdf(np.array([0.2]))[0]
    assert lo == pytest.approx(hi, abs=1e-10)
    # E[T] = c^2 and E[T^2] = 5 c^4 / 3 for exit from (-c, c)
    m1 = integrate.quad(lambda s: 1 - analytic.two_sided_exit_cdf(s)[0], 0, 50)[0]
    m2 = integrate.quad(lambda s: 2 * s * (1 - analytic.two_sided_exit_cdf(s)[0]), 0, 50)[0]
    assert m1 == pytest.approx(1.0, rel=1e-8)
    assert m2 == pytest.approx(5 / 3, rel=1e-8)
    assert analytic.two_sided_exit_cdf(np.array([0.8]), c=2.0)[0] == pytest.approx(
        analytic.two_sided_exit_cdf(np.array([0.2]))[0])


def test_abs_exit_position_cdf_matches_density():
    c = 0.7
    for x in (0.1, 0.5, 2.0):
        dens = 2 * integrate.quad(lambda u: analytic.exit_density_beta(u, c), 0, x)[0]
        assert analytic.abs_exit_position_cdf(x, c) == pytest.approx(dens, rel=1e-9)


def test_exit_density_beta():
    c = 0.6
    assert analytic.exit_density_beta(0.0, c) == pytest.approx(1 / (2 * c))
    assert analytic.exit_density_beta(1.3, c) == analytic.exit_density_beta(-1.3, c)
    tot = integrate.quad(lambda u: analytic.exit_density_beta(u, c), -np.inf, np.inf)[0]
    assert tot == pytest.approx(1.0, abs=1e-12)


def test_ou_modulus_cdf():
    # from 0 the squared modulus is exponential with mean 2 v
    lam, t = 1.0, 40.0
    rho = np.array([0.3, 1.0, 2.0])
    assert np.allclose(analytic.ou_modulus_cdf(rho, t, lam), -np.expm1(-lam * rho ** 2), atol=1e-12)
    assert np.allclose(analytic.ou_modulus_cdf(rho, 1.0, 0.0, 0.0), stats.rayleigh.cdf(rho))


def test_expected_log_exit_bm():
    assert analytic.expected_log_exit_bm(0.8) > analytic.expected_log_exit_bm(0.4)
    r = [analytic.expected_log_exit_bm(c) / math.log(c) for c in (1e-2, 1e-3, 1e-4)]
    assert abs(r[-1] - 2) < abs(r[0] - 2) and abs(r[-1] - 2) < 0.05
    # scaling: T_c = c^2 T_1 for the double boundary only holds for 1-d; check against
    # the skew-product form E[log T] = E[log int_0^{T_c} exp(2 beta) ds] via MC in test_exit_cone


def test_sinh4_closed_vs_integral():
    for c in np.linspace(0.01, math.pi / 8 - 0.01, 8):
        assert analytic.sinh4_moment_integral(c) == pytest.approx(analytic.sinh4_moment_closed(c), abs=1e-9)
    c = math.pi / 16
    assert analytic.sinh4_moment_closed(c) == pytest.approx(
        (math.sqrt(2) - 4 / math.cos(math.pi / 8) + 3) / 8, rel=1e-12)
    assert analytic.sinh4_moment_closed(1e-6) == pytest.approx(0.0, abs=1e-20)
    with pytest.raises(DomainError):
        analytic.sinh4_moment_closed(math.pi / 8)


def test_sinh2_closed():
    assert analytic.sinh2_moment_closed(0.3) == pytest.approx((1 / math.cos(0.6) - 1) / 2)
    assert analytic.sinh2_moment_closed(1e-4) / 1e-8 == pytest.approx(1.0, rel=1e-6)
    c = np.linspace(0.01, 0.78, 20)
    assert np.all(np.diff([analytic.sinh2_moment_closed(x) for x in c]) > 0)


def test_laplace_exit_level():
    assert analytic.laplace_exit_level(1e-9, 2.0, 1.0) == pytest.approx(1.0, abs=1e-6)
    assert analytic.laplace_exit_level(1.0, 2.0, 1e-6) == pytest.approx(math.exp(-2 * math.sqrt(2)), abs=1e-4)
    # direct oracle: E[(1 + 2 lam T)^(-mu / 2 lam)] with T = r^2 / N^2, by quadrature in N
    mu, r, lam = 1.0, 2.0, 1.0
    f = lambda g: (1 + 2 * lam * r * r / g / g) ** (-mu / (2 * lam)) * 2 * stats.norm.pdf(g)
    ref = integrate.quad(f, 0, np.inf)[0]
    assert analytic.laplace_exit_level(mu, r, lam) == pytest.approx(ref, rel=1e-8)


def test_invariant_masses():
    assert analytic.invariant_disk_mass(1.0, 1.0) == pytest.approx(1 - math.exp(-1))
    assert analytic.invariant_disk_mass(50.0, 1.0) == 1.0
    assert analytic.invariant_disk_mass(1e-9, 1.0) == pytest.approx(0.0, abs=1e-15)
    dens = lambda y, x: 1 / math.pi * math.exp(-(x * x + y * y))
    quad = integrate.dblquad(dens, -1, 1, lambda x: -math.sqrt(1 - x * x), lambda x: math.sqrt(1 - x * x))[0]
    assert analytic.invariant_disk_mass(1.0, 1.0) == pytest.approx(quad, rel=1e-8)
    assert analytic.invariant_annulus_mass(1.0, 2.0, 1.0) == pytest.approx(math.exp(-1) - math.exp(-4))


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_levy_constants(alpha):
    # textbook constant of the isotropic alpha-stable Levy density in the plane
    book = alpha * 2 ** (alpha - 1) * math.gamma(1 + alpha / 2) / (math.pi * math.gamma(1 - alpha / 2))
    assert analytic.levy_density_constant_closed(alpha) == pytest.approx(book, rel=1e-14)
    assert analytic.levy_density_constant_quadrature(alpha) == pytest.approx(book, rel=1e-8)
    assert analytic.levy_density_constant_quadrature(alpha, x=2.5) == pytest.approx(book, rel=1e-8)
    assert analytic.levy_density_constant_printed(alpha) != pytest.approx(book, rel=1e-3)
