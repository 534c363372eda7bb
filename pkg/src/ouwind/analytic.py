"""Closed forms, quadratures and reference laws.

The cone/exit laws below are all expressed through the skew product of planar
BM: the winding exit time ``T^{|theta|}_c`` is the Bessel-clock image of the
exit time ``T^{|gamma|}_c`` of a 1-d BM from ``(-c, c)``, and the radial BM at
that time has density ``h_c``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special, stats

from .errors import DomainError, QuadratureFailure

EULER_GAMMA = 0.57721566490153286061


@dataclass(frozen=True)
class QuadratureConfig:
    abs_tol: float = 1e-13
    rel_tol: float = 1e-12
    max_subdivisions: int = 500
    truncation_threshold: float = 1e-16

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be positive")


DEFAULT_QUAD = QuadratureConfig()


@dataclass(frozen=True)
class CauchyLaw:
    scale: float

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("Cauchy scale must be positive")

    def cdf(self, x):
        return cauchy_cdf(x, self.scale)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return self.scale / (math.pi * (x * x + self.scale**2))

    def ppf(self, p):
        return cauchy_quantile(p, self.scale)


def _quad(f, a, b, q, points=None):
    kw = dict(epsabs=q.abs_tol, epsrel=q.rel_tol, limit=q.max_subdivisions, full_output=1)
    if points is not None and np.isfinite(b):
        kw["points"] = points
    out = integrate.quad(f, a, b, **kw)
    val, err = out[0], out[1]
    if len(out) > 3 and err > max(q.abs_tol, q.rel_tol * abs(val)) * 10:
        raise QuadratureFailure(f"quadrature on [{a}, {b}] stopped at error {err:.3g}: {out[3]}")
    return val, err


def _quad_panels(f, edges, q):
    """Sum of ``quad`` over consecutive panels; the last edge may be inf."""
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        total += _quad(f, a, b, q)[0]
    return total


# ---------------------------------------------------------------- reference laws

def cauchy_cdf(x, scale=1.0):
    if not scale > 0:
        raise ValueError("scale must be positive")
    return 0.5 + np.arctan(np.asarray(x, dtype=float) / scale) / math.pi


def cauchy_quantile(p, scale=1.0):
    return scale * np.tan(math.pi * (np.asarray(p, dtype=float) - 0.5))


def half_cauchy_cdf(x, scale=1.0):
    x = np.asarray(x, dtype=float)
    return np.where(x > 0, 2.0 / math.pi * np.arctan(np.maximum(x, 0.0) / scale), 0.0)


def normal_cdf(x, var=1.0):
    return special.ndtr(np.asarray(x, dtype=float) / math.sqrt(var))


def half_normal_cdf(x, var=1.0):
    x = np.asarray(x, dtype=float)
    return np.where(x > 0, special.erf(np.maximum(x, 0.0) / math.sqrt(2.0 * var)), 0.0)


def rayleigh_cdf(x, var=1.0):
    """Law of the modulus of a planar centred Gaussian with per-coordinate ``var``."""
    x = np.asarray(x, dtype=float)
    return np.where(x > 0, -np.expm1(-np.maximum(x, 0.0) ** 2 / (2.0 * var)), 0.0)


def exponential_cdf(x, mean):
    x = np.asarray(x, dtype=float)
    return np.where(x > 0, -np.expm1(-np.maximum(x, 0.0) / mean), 0.0)


def levy_cdf(s):
    """CDF of the index-1/2 positive stable law with Laplace transform exp(-sqrt(mu))."""
    s = np.asarray(s, dtype=float)
    return np.where(s > 0, special.erfc(0.5 / np.sqrt(np.maximum(s, 1e-300))), 0.0)


def two_sided_exit_cdf(t, c=1.0, n_terms=200):
    """CDF of the first exit time of 1-d BM from (-c, c), started at 0.

    Uses the eigenfunction series for t >= 0.2 c^2 and the image series of
    the complementary function for small t; both converge very fast there.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float)) / (c * c)
    out = np.zeros_like(t)
    big = t >= 0.2
    if np.any(big):
        tb = t[big][:, None]
        k = np.arange(n_terms)[None, :]
        m = 2 * k + 1
        surv = 4.0 / math.pi * np.sum((-1.0) ** k / m * np.exp(-(m**2) * math.pi**2 * tb / 8.0), axis=1)
        out[big] = 1.0 - surv
    small = (t > 0) & ~big
    if np.any(small):
        ts = t[small][:, None]
        k = np.arange(n_terms)[None, :]
        # P(T <= t) = 2 sum_k (-1)^k erfc((2k+1)/sqrt(2t))
        out[small] = 2.0 * np.sum((-1.0) ** k * special.erfc((2 * k + 1) / np.sqrt(2.0 * ts)), axis=1)
    return out


def abs_exit_position_cdf(x, c=1.0):
    """CDF of |beta| at the exit time of the angular BM from (-c, c)."""
    x = np.asarray(x, dtype=float)
    return np.where(x > 0, 4.0 / math.pi * np.arctan(np.tanh(math.pi * np.maximum(x, 0.0) / (4.0 * c))), 0.0)


def ou_modulus_cdf(rho, t, lam, z0=1.0):
    """Exact law of |Z_t| for the complex OU started at z0."""
    rho = np.asarray(rho, dtype=float)
    if lam > 0:
        v = -math.expm1(-2.0 * lam * t) / (2.0 * lam)
    else:
        v = t
    m2 = abs(z0) ** 2 * math.exp(-2.0 * lam * t)
    x = np.maximum(rho, 0.0) ** 2 / v
    if m2 == 0.0:
        return np.where(rho > 0, -np.expm1(-x / 2.0), 0.0)
    return np.where(rho > 0, stats.ncx2.cdf(x, 2, m2 / v), 0.0)


# ---------------------------------------------------------------- exit moments

def exit_density_beta(x, c):
    """Density of the radial BM at the angular exit time from (-c, c)."""
    if not c > 0:
        raise ValueError("c must be positive")
    u = np.abs(np.asarray(x, dtype=float)) * math.pi / (2.0 * c)
    # sech(u) = 2 e^{-u} / (1 + e^{-2u}) stays finite for large u
    e = np.exp(-u)
    return (0.5 / c) * 2.0 * e / (1.0 + e * e)


def _log_sinh(x):
    # log sinh(x) for x > 0 without overflow
    if x > 20.0:
        return x - math.log(2.0) + math.log1p(-math.exp(-2.0 * x))
    return math.log(math.sinh(x))


def _sech(x):
    if x > 700.0:
        return 0.0
    return 1.0 / math.cosh(x)


def expected_log_exit_bm(c, q=DEFAULT_QUAD):
    """E[log T^{|theta|}_c] for planar BM started at 1.

    ``2 int_0^inf log(sinh(c z)) / cosh(pi z / 2) dz + log 2 + Euler gamma``.
    The log singularity at 0 is removed by ``z = e^u`` on (0, 1].
    """
    if not c > 0:
        raise ValueError("c must be positive")

    def head(u):
        z = math.exp(u)
        return z * _log_sinh(c * z) * _sech(0.5 * math.pi * z)

    def tail(z):
        return _log_sinh(c * z) * _sech(0.5 * math.pi * z)

    # below u = -60 the head integrand is smaller than 60 e^{-60} (|log c| + 60)
    lo = -60.0 - max(0.0, -math.log(c))
    h = _quad_panels(head, [lo, -20.0, -5.0, 0.0], q)
    tl = _quad_panels(tail, [1.0, 5.0, 20.0, math.inf], q)
    return 2.0 * (h + tl) + math.log(2.0) + EULER_GAMMA


def _check_sinh4_domain(c):
    if not (0.0 < c < math.pi / 8.0):
        raise DomainError(f"fourth sinh moment needs 0 < c < pi/8, got {c}")


def sinh4_moment_closed(c):
    _check_sinh4_domain(c)
    return (1.0 / math.cos(4 * c) - 4.0 / math.cos(2 * c) + 3.0) / 8.0


def sinh4_moment_integral(c, q=DEFAULT_QUAD):
    """Quadrature of ``int_0^inf sinh(c z)^4 / cosh(pi z / 2) dz``.

    Written as ``e^{-eps z} g(z) / 8`` with ``eps = pi/2 - 4c`` and
    ``g = (1 - e^{-2cz})^4 / (1 + e^{-pi z})``.  For c close to pi/8 the decay
    rate eps is tiny, so the constant limit of ``g`` is integrated in closed form
    (``1 / (8 eps)``) and only the fast-decaying remainder goes to the quadrature.
    """
    _check_sinh4_domain(c)
    eps = 0.5 * math.pi - 4.0 * c

    def g(z):
        return (-math.expm1(-2.0 * c * z)) ** 4 / (1.0 + math.exp(-math.pi * z)) if z < 700 else 1.0

    if c < math.pi / 16.0:
        f = lambda z: math.exp(-eps * z) * g(z) / 8.0
        scale = 1.0 / eps
        return _quad_panels(f, [0.0, scale, 10 * scale, 40 * scale, math.inf], q)
    # remainder decays at rate eps + min(2c, pi) >= pi/8
    f = lambda z: math.exp(-eps * z) * (g(z) - 1.0) / 8.0
    scale = 1.0 / (2.0 * c)
    rem = _quad_panels(f, [0.0, scale, 10 * scale, 40 * scale, math.inf], q)
    return 1.0 / (8.0 * eps) + rem


def sinh2_moment_closed(c):
    """E[sinh(beta_T)^2] = (sec(2c) - 1) / 2, which also equals E[T^{|theta|}_c]."""
    if not (0.0 < c < math.pi / 4.0):
        raise DomainError(f"second sinh moment needs 0 < c < pi/4, got {c}")
    return 0.5 * (1.0 / math.cos(2.0 * c) - 1.0)


def laplace_exit_level(mu, r, lam, q=DEFAULT_QUAD):
    """E[exp(-mu T_r)] where T_r is the OU time at which e^{lam t} Xi_t first hits r.

    ``T_r = log(1 + 2 lam T^delta_r) / (2 lam)`` with ``T^delta_r`` the hitting
    time of r by a standard BM from 0, so with ``kappa = mu / (2 lam)``

        E = Gamma(kappa)^{-1} int_0^inf t^{kappa-1} exp(-t - 2 r sqrt(lam t)) dt.
    """
    if not (mu > 0 and lam > 0):
        raise DomainError("mu and lambda must be positive")
    if not r > 1:
        raise DomainError(f"level r must exceed 1, got {r}")
    kappa = mu / (2.0 * lam)
    b = 2.0 * r * math.sqrt(lam)
    if kappa < 1.0:
        # t = u^{1/kappa} removes the t^{kappa-1} endpoint singularity
        inv = 1.0 / kappa

        def f(u):
            if u == 0.0:
                return 1.0
            t = u**inv
            return math.exp(-t - b * math.sqrt(t))

        # the integrand is below 1e-300 once t > 700
        u_max = 700.0**kappa
        edges = [0.0, min(1.0, u_max), u_max]
        return _quad_panels(f, sorted(set(edges)), q) / math.gamma(kappa + 1.0)

    lg = math.lgamma(kappa)

    def f(t):
        if t <= 0.0:
            return 0.0 if kappa > 1.0 else math.exp(-lg)
        return math.exp((kappa - 1.0) * math.log(t) - t - b * math.sqrt(t) - lg)

    w = math.sqrt(kappa)
    centre = max(kappa - 1.0, 0.0)
    edges = [0.0]
    for k in (-60, -20, -5, 0, 5, 20, 60):
        e = centre + k * w
        if e > edges[-1]:
            edges.append(e)
    edges.append(math.inf)
    return _quad_panels(f, edges, q)


def invariant_disk_mass(r, lam):
    """Mass of the disk of radius r under the density (lam/pi) exp(-lam |z|^2)."""
    if not (r > 0 and lam > 0):
        raise ValueError("r and lambda must be positive")
    return -math.expm1(-lam * r * r)


def invariant_annulus_mass(r1, r2, lam):
    return invariant_disk_mass(r2, lam) - invariant_disk_mass(r1, lam)


# ---------------------------------------------------------------- stable Levy measure

def levy_density_constant_printed(alpha):
    """Constant of the |x|^{-2-alpha} Levy density as printed in the source derivation."""
    return alpha * 2.0 ** (-1.0 + alpha / 2.0) * math.gamma(1.0 + alpha / 2.0) / (
        math.pi * math.gamma(1.0 - alpha / 2.0))


def levy_density_constant_closed(alpha):
    """Constant obtained by evaluating the subordination integral in closed form."""
    return alpha * 2.0 ** (alpha - 1.0) * math.gamma(1.0 + alpha / 2.0) / (
        math.pi * math.gamma(1.0 - alpha / 2.0))


def levy_density_constant_quadrature(alpha, x=1.0, q=DEFAULT_QUAD):
    """Levy density of Q_{2S} at |x| times |x|^{2 + alpha}, by 1-d quadrature.

    Subordinator Levy measure ``(a/Gamma(1-a)) s^{-1-a} ds`` with ``a = alpha/2``
    mixed against the planar heat kernel of variance 2s per coordinate.
    """
    a = alpha / 2.0
    x2 = x * x

    def f(s):
        return s ** (-2.0 - a) * math.exp(-x2 / (4.0 * s)) if s > 0 else 0.0

    # the integrand peaks at s = x^2 / (4 (2 + a))
    peak = x2 / (4.0 * (2.0 + a))
    val = _quad_panels(f, [0.0, peak, 10 * peak, 1000 * peak, math.inf], q)
    dens = a / math.gamma(1.0 - a) / (4.0 * math.pi) * val
    return dens * x ** (2.0 + alpha)
