"""Cone exit times for planar BM and complex OU, and the identities linking them.

The OU exit time from a cone is the BM exit time seen through the inverse
clock, ``T_ou = log(1 + 2 lam T_bm) / (2 lam)``.  Exit times are simulated by
:func:`ouwind.windings.run_batch`; the kernel refines steps near a barrier
until the crossing probability of the angle bridge is negligible, so the only
bias left is the resolution of the final sub-step.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import analytic
from .core import SeedSpec, TimeGrid, alpha_inverse, alpha_time
from .errors import Censored, DomainError
from .windings import CENSORED, EXIT_DOUBLE, EXIT_SINGLE, run_batch

# purposes for the SeedSpec streams that are not path increments
HITTING_DRAWS = 7


class Boundary(enum.Enum):
    SINGLE = "SINGLE"
    DOUBLE = "DOUBLE"


class Regime(enum.Enum):
    SMALL_C = "SMALL_C"
    LARGE_C = "LARGE_C"


def _mode(boundary):
    return EXIT_SINGLE if Boundary(boundary) is Boundary.SINGLE else EXIT_DOUBLE


@dataclass(frozen=True)
class ExitSample:
    c: float
    boundary: Boundary
    t_bm: float
    t_ou: float
    censored: bool


@dataclass
class ExitBatch:
    """Exit times of many independent paths; censored entries hold ``inf``."""
    c: float
    boundary: Boundary
    lam: float
    t_bm: np.ndarray | None = field(repr=False)
    t_ou: np.ndarray = field(repr=False)
    censored: np.ndarray = field(repr=False)
    n_deep: int = 0

    @property
    def n(self):
        return self.t_ou.size

    @property
    def censored_fraction(self):
        return float(np.mean(self.censored))

    def samples(self):
        tb = self.t_bm if self.t_bm is not None else np.full(self.n, np.nan)
        return [ExitSample(self.c, self.boundary, float(a), float(b), bool(k))
                for a, b, k in zip(tb, self.t_ou, self.censored)]


def transform_exit(t_bm, lam):
    """OU exit time from a BM exit time: ``log(1 + 2 lam t_bm) / (2 lam)``."""
    if np.any(np.asarray(t_bm) < 0):
        raise ValueError("exit times are nonnegative")
    return alpha_inverse(t_bm, lam)


def exit_grid(horizon, first_step, max_step=math.inf, ratio=1.05):
    """Grid with uniform head, geometric growth by ``ratio``, capped at ``max_step``.

    Exact bridge refinement makes the result independent of the grid in law;
    the grid only sets how much refinement work each path needs.
    """
    start = min(horizon, 10 * first_step)
    t = list(np.arange(0.0, start, first_step))
    s = start
    h = first_step
    while s < horizon:
        t.append(s)
        h = min(h * ratio, max_step)
        s += h
    t.append(horizon)
    t = np.asarray(t)
    keep = np.concatenate([[True], np.diff(t) > 1e-12 * max(1.0, horizon)])
    return TimeGrid(t[keep])


def default_bm_horizon(c, boundary, censor=1e-3):
    """BM horizon leaving roughly a ``censor`` fraction of paths unexited.

    Double boundary: P(T > t) decays like t^{-pi/(4c)}.  Single boundary:
    P(T > t) ~ 4c / (pi log t), capped at 1e300.
    """
    if Boundary(boundary) is Boundary.DOUBLE:
        return max(1.0, c * c) * 10.0 * censor ** (-4.0 * c / math.pi)
    return math.exp(min(690.0, 4.0 * c / (math.pi * censor)))


def exit_times_bm(c, boundary, n_paths, master_seed, horizon=None, lam=0.0,
                  stream_base=0, z0=1.0 + 0j) -> ExitBatch:
    """BM cone exits; ``t_ou`` holds the transform with drift ``lam`` (identity at 0)."""
    if c <= 0:
        raise ValueError("cone half-angle must be positive")
    if horizon is None:
        horizon = default_bm_horizon(c, boundary)
    grid = exit_grid(horizon, min(c * c, 1.0) / 20.0)
    res = run_batch(grid.t, 0.0, n_paths, master_seed, z0=z0, stream_base=stream_base,
                    exit_mode=_mode(boundary), c=c)
    cens = res.status == CENSORED
    t_bm = np.where(cens, np.inf, res.t_exit)
    return ExitBatch(c, Boundary(boundary), lam, t_bm, transform_exit(t_bm, lam), cens,
                     int(res.n_deep.sum()))


def exit_times_ou(c, boundary, lam, n_paths, master_seed, horizon=None,
                  stream_base=0, z0=1.0 + 0j) -> ExitBatch:
    """Direct OU cone exits, simulated in OU time (``t_bm`` is None)."""
    if c <= 0 or lam <= 0:
        raise ValueError("need c > 0 and lambda > 0")
    if horizon is None:
        horizon = float(alpha_inverse(default_bm_horizon(c, boundary), lam))
    first = min(c * c, 1.0 / lam) / 20.0
    grid = exit_grid(horizon, first, max_step=0.05 / lam)
    res = run_batch(grid.t, lam, n_paths, master_seed, z0=z0, stream_base=stream_base,
                    exit_mode=_mode(boundary), c=c)
    cens = res.status == CENSORED
    return ExitBatch(c, Boundary(boundary), lam, None, np.where(cens, np.inf, res.t_exit), cens,
                     int(res.n_deep.sum()))


def sample_exit_bm(c, boundary, horizon, step, seed: SeedSpec, lam=None) -> ExitSample:
    """One BM exit time; ``step`` is the first grid step, ``lam`` sets ``t_ou``."""
    grid = exit_grid(horizon, step)
    res = run_batch(grid.t, 0.0, 1, seed.master_seed, stream_base=seed.stream_id,
                    exit_mode=_mode(boundary), c=c)
    cens = bool(res.status[0] == CENSORED)
    t_bm = math.inf if cens else float(res.t_exit[0])
    t_ou = t_bm if not lam else float(transform_exit(t_bm, lam))
    return ExitSample(c, Boundary(boundary), t_bm, t_ou, cens)


# ---------------------------------------------------------------- Bougerol-type identity

def hitting_times_level(r, n, gen, x0=0.0):
    """Exact first hitting times of level ``r`` by a real BM from ``x0``: (r - x0)^2 / N^2."""
    return (r - x0) ** 2 / gen.standard_normal(n) ** 2


def bougerol_batch(r, lam, n_paths, master_seed, stream_base=0, step=0.01):
    """theta^Z at the first time ``e^{lam t} Xi_t = r`` for independent Z (from 1) and Xi.

    ``e^{lam t} Xi_t`` is a real BM run at ``alpha(t)``, so the hitting time is
    ``alpha^{-1}`` of a Brownian level-``r`` hitting time, drawn exactly.  The
    real process starts at 0, which makes ``|Z_0| = 1`` and ``Xi_0`` the two
    origins of the skew-product identity (arcsinh(0) = 0 and log|Z_0| = 0).
    """
    if r <= 0 or lam <= 0:
        raise ValueError("need r > 0 and lambda > 0")
    gen = SeedSpec(master_seed, stream_base).generator(HITTING_DRAWS)
    t_hit = np.asarray(transform_exit(hitting_times_level(r, n_paths, gen), lam))
    grid = TimeGrid.uniform(float(t_hit.max()) * (1 + 1e-12) + 1e-12, step / max(lam, 1.0))
    res = run_batch(grid.t, lam, n_paths, master_seed, horizon=t_hit, stream_base=stream_base + 1)
    return res.theta, t_hit


def sample_bougerol_exit(r, lam, seed: SeedSpec, max_time=None):
    """One draw of theta^Z at the level-``r`` hitting time; Cauchy(arcsinh r) in law."""
    theta, t_hit = bougerol_batch(r, lam, 1, seed.master_seed, stream_base=seed.stream_id)
    if max_time is not None and t_hit[0] > max_time:
        raise Censored(f"hitting time {t_hit[0]:g} beyond {max_time:g}")
    return float(theta[0])


def real_ou_hitting_time(path, r):
    """First grid time at which ``e^{lam t} Xi_t >= r`` on a stored real OU path (inf if none)."""
    y = np.exp(path.lam * path.grid.t) * path.xi
    hit = np.nonzero(y >= r)[0]
    return float(path.grid.t[hit[0]]) if hit.size else math.inf


# ---------------------------------------------------------------- asymptotic checks

def tail_probability(c, lam, t, n_paths, master_seed, stream_base=0):
    """2 lam t P(T^{theta(lam)}_c > t), through T_ou > t <=> T_bm > alpha(t)."""
    a_t = float(alpha_time(t, lam))
    b = exit_times_bm(c, Boundary.SINGLE, n_paths, master_seed, horizon=a_t, stream_base=stream_base)
    p = b.censored_fraction
    se = math.sqrt(p * (1 - p) / n_paths)
    return {"c": c, "lambda": lam, "t": t, "estimate": 2 * lam * t * p, "se": 2 * lam * t * se,
            "target": 4 * c / math.pi, "p_survive": p}


def band_probability(a, b, lam, t, n_paths, master_seed, stream_base=0):
    """2 lam t P(a < theta^Z_t < b), with theta^Z_t = theta^B_{alpha(t)}."""
    a_t = float(alpha_time(t, lam))
    grid = exit_grid(a_t, 0.01)
    th = run_batch(grid.t, 0.0, n_paths, master_seed, stream_base=stream_base).theta
    p = float(np.mean((th > a) & (th < b)))
    se = math.sqrt(p * (1 - p) / n_paths)
    return {"a": a, "b": b, "lambda": lam, "t": t, "estimate": 2 * lam * t * p,
            "se": 2 * lam * t * se, "target": 2 * (b - a) / math.pi}


def _mean_se(x):
    x = np.asarray(x, dtype=float)
    return float(np.mean(x)), float(np.std(x, ddof=1) / math.sqrt(x.size))


def rescaled_exit_stats(c_values, lam, regime, boundary, n_paths, master_seed, stream_base=0):
    """Laws of rescaled OU exit times against their small- or large-angle limits.

    SMALL_C: ``T / c^2`` against T^{|gamma|}_1 (double) or T^{gamma}_1 (single).
    LARGE_C: ``lam T / c`` against |beta| at T^{|gamma|}_1 (double) or |C_1| (single).
    Censored samples enter as +inf, so only ECDF and quantile statistics use them.
    """
    from .harness.stats import EmpiricalDist, ks_distance

    regime = Regime(regime)
    boundary = Boundary(boundary)
    if list(c_values) != sorted(c_values):
        raise ValueError("c_values must be sorted")
    out = []
    for i, c in enumerate(c_values):
        if regime is Regime.SMALL_C:
            horizon = 50.0 * c * c if boundary is Boundary.DOUBLE else None
            b = exit_times_ou(c, boundary, lam, n_paths, master_seed, horizon=horizon,
                              stream_base=stream_base + 1000 * i)
            x = b.t_ou / (c * c)
            ref = (lambda s: analytic.two_sided_exit_cdf(s, 1.0)) if boundary is Boundary.DOUBLE \
                else (lambda s: analytic.levy_cdf(np.asarray(s) / 2.0))
        else:
            horizon = 2.0 / (math.pi * 0.005) * c / lam
            b = exit_times_ou(c, boundary, lam, n_paths, master_seed, horizon=horizon,
                              stream_base=stream_base + 1000 * i)
            x = lam * b.t_ou / c
            ref = (lambda s: analytic.abs_exit_position_cdf(s, 1.0)) if boundary is Boundary.DOUBLE \
                else (lambda s: analytic.half_cauchy_cdf(s, 1.0))
        dist = EmpiricalDist(x)
        rep = {"c": c, "lambda": lam, "regime": regime.value, "boundary": boundary.value,
               "n": int(x.size), "censored_fraction": b.censored_fraction,
               "median": dist.quantile(0.5), "ks": ks_distance(dist, ref),
               "n_deep": b.n_deep}
        if not b.censored.any():
            rep["mean"], rep["mean_se"] = _mean_se(x)
            rep["m2"], rep["m2_se"] = _mean_se(x * x)
        out.append(rep)
    return out


def lambda_asymptotics(c, lambda_values, n_paths, master_seed, branch="large", stream_base=0):
    """Large- and small-lambda behaviour of the OU double-boundary exit time.

    ``large``: 2 lam E[T] - log(2 lam) from direct OU exits, one seed block per
    lambda; target E[log T_bm].  ``small``: slope (E[T_ou] - E[T_bm]) / lam from
    common BM exits seen through each clock; target -sinh4_moment_closed(c)/3.
    The common-sample estimator is the one the small-lambda expansion is about
    (same BM exit, two clocks); it has an SE that does not blow up like 1/lam.
    """
    rows = []
    if branch == "large":
        target = analytic.expected_log_exit_bm(c)
        for i, lam in enumerate(lambda_values):
            b = exit_times_ou(c, Boundary.DOUBLE, lam, n_paths, master_seed, stream_base=stream_base + 1000 * i)
            if b.censored.any():
                raise Censored(f"{int(b.censored.sum())} OU exits censored at lambda={lam}")
            m, se = _mean_se(2 * lam * b.t_ou)
            est = m - math.log(2 * lam)
            rows.append({"lambda": lam, "estimate": est, "se": se, "target": target,
                         "gap": abs(est - target)})
        return {"c": c, "branch": branch, "target": target, "rows": rows}
    if branch != "small":
        raise ValueError("branch must be 'large' or 'small'")
    if c >= math.pi / 8:
        raise DomainError("the small-lambda expansion needs c < pi/8")
    b = exit_times_bm(c, Boundary.DOUBLE, n_paths, master_seed, stream_base=stream_base)
    if b.censored.any():
        raise Censored(f"{int(b.censored.sum())} BM exits censored")
    t = b.t_bm
    target = -analytic.sinh4_moment_closed(c) / 3.0
    for lam in lambda_values:
        m, se = _mean_se((transform_exit(t, lam) - t) / lam)
        rows.append({"lambda": lam, "estimate": m, "se": se, "target": target,
                     "gap": abs(m - target)})
    mt, set_ = _mean_se(t)
    return {"c": c, "branch": branch, "target": target, "rows": rows,
            "mean_t_bm": mt, "mean_t_bm_se": set_, "sinh2_closed": analytic.sinh2_moment_closed(c)}


def spitzer_symmetry_check(c, x, lam, n_paths, master_seed, stream_base=0):
    """P(T^{theta(lam)}_c < c x / lam) against P(|theta^Z_t| > c) at t = c x / lam."""
    t = c * x / lam
    b = exit_times_ou(c, Boundary.SINGLE, lam, n_paths, master_seed, horizon=t, stream_base=stream_base)
    p1 = 1.0 - b.censored_fraction
    grid = TimeGrid.for_ou(t, lam)
    th = run_batch(grid.t, lam, n_paths, master_seed, stream_base=stream_base + 5000).theta
    p2 = float(np.mean(np.abs(th) > c))
    se = math.sqrt(p1 * (1 - p1) / n_paths + p2 * (1 - p2) / n_paths)
    return {"c": c, "x": x, "lambda": lam, "p_exit": p1, "p_winding": p2, "se": se}
