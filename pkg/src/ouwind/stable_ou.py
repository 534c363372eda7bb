"""Stable subordinators, isotropic stable processes and OU driven by them (OUSP).

The OUSP ``V_t = e^{-lam t} (1 + int_0^{lam t} e^s dU_s)`` is discretised with
left-end weights on the driving clock ``s = lam t``, which gives the one-step
recursion ``V_{k+1} = e^{-lam dt} (V_k + dU_k)``.  Between grid points the
curve is filled by the chord of each step (a radial decay does not rotate),
so every winding increment is the principal angle of ``1 + dU_k / V_k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from .core import OuParams, SeedSpec, TimeGrid
from .errors import SegmentThroughOrigin, ZeroPoint
from .simulate import BASE_DRAWS, PathKind, PlanarPath, complex_normals
from .windings import GUARD_ANGLE, WindingTrace

SUB_DRAWS = 2
JUMP_FACTOR = 3.0
SEGMENT_FLOOR = 1e-300


def positive_stable(index, n, gen):
    """Kanter's representation of the one-sided stable law, E exp(-mu S) = exp(-mu^index).

    ``S = sin(a U) / sin(U)^{1/a} * (sin((1-a) U) / E)^{(1-a)/a}`` with U uniform
    on (0, pi) and E standard exponential.
    """
    a = float(index)
    if not 0.0 < a < 1.0:
        raise ValueError("stable index must lie in (0, 1)")
    u = math.pi * gen.random(n)
    e = gen.standard_exponential(n)
    return np.sin(a * u) / np.sin(u) ** (1.0 / a) * (np.sin((1.0 - a) * u) / e) ** ((1.0 - a) / a)


def sample_positive_stable(index, seed: SeedSpec):
    return float(positive_stable(index, 1, seed.generator(SUB_DRAWS))[0])


@dataclass(frozen=True)
class SubordinatorPath:
    grid: TimeGrid
    s: np.ndarray = field(repr=False)
    index: float


def subordinator_increments(h, index, gen):
    """S(t + h) - S(t) = h^{1/index} S(1) for every step in ``h``."""
    h = np.asarray(h, dtype=float)
    return h ** (1.0 / index) * positive_stable(index, h.size, gen)


def sample_subordinator(grid: TimeGrid, index, seed: SeedSpec) -> SubordinatorPath:
    ds = subordinator_increments(grid.steps, index, seed.generator(SUB_DRAWS))
    s = np.concatenate([[0.0], np.cumsum(ds)])
    return SubordinatorPath(grid, s, float(index))


def stable_increments(h, alpha, gen):
    """Increments of Q_{2S(t)} over steps ``h``: sqrt(2 dS) times a complex normal."""
    ds = subordinator_increments(h, alpha / 2.0, gen)
    return np.sqrt(2.0 * ds) * complex_normals(gen, ds.size)


def sample_isotropic_stable(grid: TimeGrid, alpha, seed: SeedSpec, u0=1.0 + 0j) -> PlanarPath:
    """Isotropic alpha-stable path as subordinated planar BM, started at ``u0``."""
    if not 0.0 < alpha < 2.0:
        raise ValueError("alpha must lie in (0, 2)")
    du = stable_increments(grid.steps, alpha, seed.generator(BASE_DRAWS))
    z = np.concatenate([[complex(u0)], complex(u0) + np.cumsum(du)])
    return PlanarPath(grid, z, PathKind.OUSP, OuParams(0.0, u0, alpha), seed)


@dataclass(frozen=True)
class OuspPath:
    grid: TimeGrid
    v: np.ndarray = field(repr=False)
    du: np.ndarray = field(repr=False)
    jumps: list = field(repr=False)
    params: OuParams

    def as_planar(self, seed=SeedSpec(0)):
        return PlanarPath(self.grid, self.v, PathKind.OUSP, self.params, seed)


def jump_threshold(lam, h, alpha):
    """|dU| above 3 (lam h)^{1/alpha}, the driving-clock scale of one step, marks a jump."""
    return JUMP_FACTOR * (lam * h) ** (1.0 / alpha)


def ousp_from_increments(grid: TimeGrid, params: OuParams, du) -> OuspPath:
    """V_{k+1} = e^{-lam h_k} (V_k + dU_k), with dU_k the driving increment over lam h_k."""
    lam = params.lam
    h = grid.steps
    du = np.asarray(du, dtype=complex)
    if du.shape != h.shape:
        raise ValueError("one driving increment per step")
    decay = np.exp(-lam * h)
    v = np.empty(len(grid), dtype=complex)
    v[0] = params.z0
    x = complex(params.z0)
    for k in range(h.size):
        x = decay[k] * (x + du[k])
        v[k + 1] = x
    thr = jump_threshold(lam, h, params.alpha)
    jumps = [(int(k), complex(decay[k] * du[k])) for k in np.nonzero(np.abs(du) > thr)[0]]
    return OuspPath(grid, v, du, jumps, params)


def sample_ousp(grid: TimeGrid, params: OuParams, seed: SeedSpec) -> OuspPath:
    """OUSP from ``params.z0`` driven by the isotropic stable process on the clock lam t."""
    if not (0.0 < params.alpha < 2.0 and params.lam > 0.0):
        raise ValueError("OUSP needs 0 < alpha < 2 and lambda > 0")
    du = stable_increments(params.lam * grid.steps, params.alpha, seed.generator(BASE_DRAWS))
    return ousp_from_increments(grid, params, du)


@dataclass(frozen=True)
class JumpWindingTrace(WindingTrace):
    theta_jump: np.ndarray = field(repr=False, default=None)
    n_guard: int = 0


def _segment_distance(a, b):
    """Distance from the origin to the segment [a, b]."""
    d = b - a
    dd = (d * d.conjugate()).real if isinstance(d, complex) else np.abs(d) ** 2
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.clip(np.where(dd > 0, -(a * np.conj(d)).real / np.where(dd > 0, dd, 1.0), 0.0), 0.0, 1.0)
    return np.abs(a + s * d)


def track_winding_jumps(path: OuspPath, guard_angle=GUARD_ANGLE) -> JumpWindingTrace:
    """Winding of the chord-filled OUSP curve, split into jump and small-step parts.

    ``n_guard`` counts small (non-jump) steps whose rotation exceeds the guard;
    no stable bridge exists to refine them, so callers discard such paths.
    """
    v = path.v
    r = np.abs(v)
    if np.any(r < SEGMENT_FLOOR):
        raise ZeroPoint("OUSP vertex at the numerical origin")
    h = path.grid.steps
    pre = np.exp(-path.params.lam * h) * v[:-1]
    if np.any(_segment_distance(pre, v[1:]) < SEGMENT_FLOOR):
        raise SegmentThroughOrigin("a chord passes through the origin")
    d = np.angle(v[1:] * np.conj(v[:-1]))
    is_jump = np.zeros(h.size, dtype=bool)
    if path.jumps:
        is_jump[[k for k, _ in path.jumps]] = True
    n_guard = int(np.sum(~is_jump & (np.abs(d) > guard_angle)))
    outside = r[:-1] >= 1.0
    n = len(v)
    theta = np.concatenate([[0.0], np.cumsum(d)])
    plus = np.concatenate([[0.0], np.cumsum(np.where(outside, d, 0.0))])
    jump = np.concatenate([[0.0], np.cumsum(np.where(is_jump, d, 0.0))])
    return JumpWindingTrace(path.grid, theta, np.log(r), plus, theta - plus, path.grid.t[:-1].copy(),
                            r[:-1].copy(), d, 0, jump, n_guard)


def ousp_radial(path: OuspPath):
    """log |V_t| along the grid."""
    r = np.abs(path.v)
    if np.any(r < SEGMENT_FLOOR):
        raise ZeroPoint("OUSP vertex at the numerical origin")
    return np.log(r)


def sde_increments(path: OuspPath):
    """Per-step winding and log-radius increments from the driving increments.

    With ``w = dU_k / V_k`` the integrands of the winding and radial SDEs are
    ``Im w = (V1 dU2 - V2 dU1) / |V|^2`` and ``Re w = (V1 dU1 + V2 dU2) / |V|^2``;
    the chord of the step contributes exactly ``atan2(Im w, 1 + Re w)`` and
    ``-lam h + log|1 + w|``.
    """
    v = path.v[:-1]
    du = path.du
    den = (v * np.conj(v)).real
    im = (v.real * du.imag - v.imag * du.real) / den
    re = (v.real * du.real + v.imag * du.imag) / den
    dth = np.arctan2(im, 1.0 + re)
    dlr = -path.params.lam * path.grid.steps + 0.5 * np.log1p(2.0 * re + re * re + im * im)
    return dth, dlr, im, re


def sde_residuals(path: OuspPath, guard_angle=GUARD_ANGLE):
    """max |theta increment - SDE increment| and the radial analogue, over guard-safe steps."""
    tr = track_winding_jumps(path, guard_angle)
    dth, dlr, _, _ = sde_increments(path)
    ok = np.abs(tr.sub_dtheta) <= guard_angle
    lr = ousp_radial(path)
    res_th = np.abs(tr.sub_dtheta - dth)[ok]
    res_lr = np.abs(np.diff(lr) - dlr)
    return float(res_th.max(initial=0.0)), float(res_lr.max(initial=0.0))


# ---------------------------------------------------------------- batch simulation

@nb.njit(cache=True)
def _ousp_kernel(v, du, decay, guard, thr, theta, n_guard):
    for p in range(v.shape[0]):
        x = v[p]
        th = 0.0
        ng = 0
        for k in range(du.shape[1]):
            y = decay[k] * (x + du[p, k])
            w = y * x.conjugate()
            d = math.atan2(w.imag, w.real)
            if abs(d) > guard and abs(du[p, k]) <= thr[k]:
                ng += 1
            th += d
            x = y
        v[p] = x
        theta[p] += th
        n_guard[p] += ng


def ousp_batch(lam, alpha, horizon, step, n_paths, master_seed, stream_base=0,
               clock="driving", guard_angle=GUARD_ANGLE, block=2000, chunk=20000):
    """Terminal winding and |V_T| of many OUSP paths from 1.

    ``clock="driving"`` draws each increment of U over the driving-clock step
    lam h; ``clock="scaled"`` draws it over h and multiplies by lam^{1/alpha}.
    Paths with a guard-violating small step are flagged in ``n_guard``.
    """
    grid = TimeGrid.uniform(horizon, step)
    h = grid.steps
    decay = np.exp(-lam * h)
    thr = jump_threshold(lam, h, alpha)
    theta = np.zeros(n_paths)
    n_guard = np.zeros(n_paths, dtype=np.int64)
    v_end = np.empty(n_paths, dtype=complex)
    for ci, lo in enumerate(range(0, n_paths, chunk)):
        hi = min(lo + chunk, n_paths)
        gen = SeedSpec(master_seed, stream_base + ci).generator(BASE_DRAWS)
        v = np.ones(hi - lo, dtype=complex)
        th = np.zeros(hi - lo)
        ng = np.zeros(hi - lo, dtype=np.int64)
        for k0 in range(0, h.size, block):
            hb = h[k0:k0 + block]
            m = hi - lo
            if clock == "driving":
                du = stable_increments(np.tile(lam * hb, m), alpha, gen)
            elif clock == "scaled":
                du = lam ** (1.0 / alpha) * stable_increments(np.tile(hb, m), alpha, gen)
            else:
                raise ValueError("clock must be 'driving' or 'scaled'")
            _ousp_kernel(v, du.reshape(m, hb.size), decay[k0:k0 + block], guard_angle,
                         thr[k0:k0 + block], th, ng)
        theta[lo:hi], n_guard[lo:hi], v_end[lo:hi] = th, ng, v
    return theta, np.abs(v_end), n_guard
