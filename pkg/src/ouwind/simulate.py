"""Path samplers: planar BM, complex OU (exact and Euler), real OU, and exact bridges.

All OU bridges are built in the local OU clock of a step: on ``[t_a, t_a + h]``
the rescaled path ``w(s) = e^{lam s} Z_{t_a + s}`` is a planar BM run at
``a(s) = (e^{2 lam s} - 1) / (2 lam)``, started from ``Z_{t_a}``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .core import OuParams, SeedSpec, TimeGrid, alpha_inverse, alpha_time, ou_variance
from .errors import StepTooLarge, UnsupportedKind

# purposes for SeedSpec.generator
BASE_DRAWS = 0
BRIDGE_DRAWS = 1


class PathKind(enum.Enum):
    BM = "BM"
    OU_EXACT = "OU_EXACT"
    OU_EULER = "OU_EULER"
    OUSP = "OUSP"


@dataclass(frozen=True)
class PlanarPath:
    grid: TimeGrid
    z: np.ndarray = field(repr=False)
    kind: PathKind
    params: OuParams
    seed: SeedSpec

    def __post_init__(self):
        if len(self.z) != len(self.grid):
            raise ValueError("positions and grid differ in length")

    @property
    def t(self):
        return self.grid.t

    def to_csv(self, fh):
        fh.write("t,re,im\n")
        for t, z in zip(self.grid.t, self.z):
            fh.write(f"{t:.17g},{z.real:.17g},{z.imag:.17g}\n")


@dataclass(frozen=True)
class RealOuPath:
    grid: TimeGrid
    xi: np.ndarray = field(repr=False)
    lam: float
    seed: SeedSpec


@dataclass(frozen=True)
class BridgeSegment:
    """Refined points on [t_k, t_{k+1}], endpoints included."""
    t: np.ndarray
    z: np.ndarray


def complex_normals(gen, n):
    g = gen.standard_normal(2 * n)
    return g[0::2] + 1j * g[1::2]


def sample_bm(grid: TimeGrid, z0, seed: SeedSpec) -> PlanarPath:
    gen = seed.generator(BASE_DRAWS)
    dz = np.sqrt(grid.steps) * complex_normals(gen, len(grid) - 1)
    z = np.empty(len(grid), dtype=complex)
    z[0] = z0
    z[1:] = z0 + np.cumsum(dz)
    lam_free = OuParams(0.0, z0 if z0 != 0 else 1.0)
    return PlanarPath(grid, z, PathKind.BM, lam_free, seed)


def sample_ou_exact(grid: TimeGrid, params: OuParams, seed: SeedSpec, shared=False) -> PlanarPath:
    """Exact OU sampling at the grid points.

    With ``shared=True`` the path is built as ``e^{-lam t} B(alpha(t))`` from the
    BM that :func:`sample_ou_shared` returns for the same seed.
    """
    if shared:
        return sample_ou_shared(grid, params, seed)[0]
    gen = seed.generator(BASE_DRAWS)
    h = grid.steps
    decay = np.exp(-params.lam * h)
    sd = np.sqrt(ou_variance(h, params.lam))
    g = complex_normals(gen, len(h))
    z = np.empty(len(grid), dtype=complex)
    z[0] = params.z0
    zk = params.z0
    for k in range(len(h)):
        zk = decay[k] * zk + sd[k] * g[k]
        z[k + 1] = zk
    return PlanarPath(grid, z, PathKind.OU_EXACT, params, seed)


def sample_ou_shared(grid: TimeGrid, params: OuParams, seed: SeedSpec):
    """(OU path, BM path on the alpha-image grid) from one set of Gaussian draws."""
    a = alpha_time(grid.t, params.lam)
    bm = sample_bm(TimeGrid(a), params.z0, seed)
    z = np.exp(-params.lam * grid.t) * bm.z
    return PlanarPath(grid, z, PathKind.OU_EXACT, params, seed), bm


def sample_ou_euler(grid: TimeGrid, params: OuParams, seed: SeedSpec) -> PlanarPath:
    """Euler-Maruyama for dZ = dW - lam Z dt; a cross-check for the exact sampler."""
    h = grid.steps
    if h.max() > 0.1 / max(params.lam, 1.0) + 1e-15:
        raise StepTooLarge(f"Euler step {h.max():g} exceeds 0.1/max(lam, 1)")
    gen = seed.generator(BASE_DRAWS)
    dw = np.sqrt(h) * complex_normals(gen, len(h))
    z = np.empty(len(grid), dtype=complex)
    z[0] = params.z0
    zk = params.z0
    for k in range(len(h)):
        zk = zk - params.lam * zk * h[k] + dw[k]
        z[k + 1] = zk
    return PlanarPath(grid, z, PathKind.OU_EULER, params, seed)


def ou_marginal(t, lam, z0, n, gen):
    """n exact draws of Z_t for the complex OU from z0 (z0 = 0 allowed)."""
    sd = math.sqrt(ou_variance(t, lam))
    return complex(z0) * math.exp(-lam * t) + sd * complex_normals(gen, n)


def ou_euler_marginal(t, lam, z0, n, step, gen):
    """n Euler draws of Z_t, vectorised over paths."""
    k = int(round(t / step))
    z = np.full(n, complex(z0))
    sd = math.sqrt(step)
    for _ in range(k):
        z = z - lam * z * step + sd * complex_normals(gen, n)
    return z


def sample_real_ou(grid: TimeGrid, lam, seed: SeedSpec, x0=1.0) -> RealOuPath:
    """Real OU d Xi = d delta - lam Xi dt, exact transitions from x0."""
    gen = seed.generator(BASE_DRAWS)
    h = grid.steps
    decay = np.exp(-lam * h)
    sd = np.sqrt(ou_variance(h, lam))
    g = gen.standard_normal(len(h))
    xi = np.empty(len(grid))
    xi[0] = x0
    x = x0
    for k in range(len(h)):
        x = decay[k] * x + sd[k] * g[k]
        xi[k + 1] = x
    return RealOuPath(grid, xi, lam, seed)


def bridge_midpoint(za, zb, h, lam, g):
    """Exact midpoint (in the local clock) of the OU or BM bridge from za to zb.

    Returns (s_mid, z_mid) where s_mid is the OU-time offset from the left end
    and ``g`` is a standard complex normal.
    """
    if lam == 0.0:
        return 0.5 * h, 0.5 * (za + zb) + math.sqrt(0.25 * h) * g
    ah = math.expm1(2.0 * lam * h) / (2.0 * lam)
    sm = math.log1p(lam * ah) / (2.0 * lam)
    wb = math.exp(lam * h) * zb
    wm = 0.5 * (za + wb) + math.sqrt(0.25 * ah) * g
    return sm, math.exp(-lam * sm) * wm


def refine_bridge(path: PlanarPath, k: int, n_sub: int, seed: SeedSpec) -> BridgeSegment:
    """Insert n_sub points between t_k and t_{k+1} from the exact conditional law.

    Points are equally spaced in the local clock ``a(s)`` and drawn
    sequentially: given w at a_j, the next point of a BM bridge to w_end at
    ``a_end`` is Gaussian with mean ``w_j + (w_end - w_j) da / (a_end - a_j)``
    and per-coordinate variance ``da (a_end - a_{j+1}) / (a_end - a_j)``.
    """
    if path.kind not in (PathKind.BM, PathKind.OU_EXACT):
        raise UnsupportedKind(f"no exact bridge for {path.kind.value} paths")
    if not (0 <= k < len(path.grid) - 1):
        raise IndexError("bridge index out of range")
    if n_sub < 1:
        raise ValueError("n_sub must be positive")
    lam = path.params.lam if path.kind is PathKind.OU_EXACT else 0.0
    t0, t1 = path.grid.t[k], path.grid.t[k + 1]
    h = t1 - t0
    a_end = float(alpha_time(h, lam))
    w_end = complex(path.z[k + 1]) * math.exp(lam * h)
    a = np.linspace(0.0, a_end, n_sub + 2)
    g = complex_normals(seed.generator(BRIDGE_DRAWS), n_sub)
    w = np.empty(n_sub + 2, dtype=complex)
    w[0] = path.z[k]
    for j in range(n_sub):
        da = a[j + 1] - a[j]
        rem = a_end - a[j]
        mean = w[j] + (w_end - w[j]) * da / rem
        var = da * (a_end - a[j + 1]) / rem
        w[j + 1] = mean + math.sqrt(var) * g[j]
    w[-1] = w_end
    s = np.asarray(alpha_inverse(a, lam))
    s[-1] = h
    z = np.exp(-lam * s) * w
    z[0], z[-1] = path.z[k], path.z[k + 1]
    return BridgeSegment(t0 + s, z)
