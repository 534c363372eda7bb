"""Continuous winding tracking, big/small and nu-gated windings, ergodic averages.

Two entry points:

* :func:`track_winding` works on a stored :class:`PlanarPath` and refines the
  offending steps by exact bridge bisection;
* :func:`run_batch` generates OU/BM paths on the fly inside a numba kernel and
  returns only the statistics needed by the Monte Carlo experiments (terminal
  or recorded windings, gated sums, cone exit times).

Both use the same refinement rule.  A step is bisected (exact bridge midpoint
in the local clock) while its principal angle exceeds the guard or while the
Bessel-clock estimate ``dH = a(h) / (|z_l| |w_r|)`` exceeds ``clock_tol``; the
second test rules out undetected full turns near the origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from .core import SeedSpec, TimeGrid, alpha_time, arg_increments
from .errors import RefinementExhausted, ZeroPoint
from .simulate import BRIDGE_DRAWS, PathKind, PlanarPath, bridge_midpoint, complex_normals

GUARD_ANGLE = math.pi / 4
CLOCK_TOL = 0.1
MAX_DEPTH = 16
BARRIER_RES = 1e-2
BARRIER_P = 1e-3

EXIT_NONE, EXIT_SINGLE, EXIT_DOUBLE = 0, 1, 2
OK, EXHAUSTED, CENSORED = 0, 1, 2


@dataclass(frozen=True)
class WindingTrace:
    grid: TimeGrid
    theta: np.ndarray = field(repr=False)
    log_r: np.ndarray = field(repr=False)
    theta_plus: np.ndarray = field(repr=False)
    theta_minus: np.ndarray = field(repr=False)
    # left endpoint, modulus and increment of every (sub)step, for nu gating
    sub_t: np.ndarray = field(repr=False, default=None)
    sub_r: np.ndarray = field(repr=False, default=None)
    sub_dtheta: np.ndarray = field(repr=False, default=None)
    n_refined: int = 0

    def to_csv(self, fh):
        fh.write("t,theta,log_r,theta_plus,theta_minus\n")
        for row in zip(self.grid.t, self.theta, self.log_r, self.theta_plus, self.theta_minus):
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


# ---------------------------------------------------------------- stored paths

def _refine_step(za, zb, h, lam, gen, guard, clock_tol, max_depth, out):
    """Depth-first bisection of one step; appends (s_left, z_left, dtheta) leaves."""
    stack = [(zb, h, 0)]
    zl, sl = za, 0.0
    n_split = 0
    while stack:
        zr, sr, lev = stack[-1]
        hh = sr - sl
        w = zr * zl.conjugate()
        dth = math.atan2(w.imag, w.real)
        ah = hh if lam == 0.0 else math.expm1(2 * lam * hh) / (2 * lam)
        dh = ah / (abs(zl) * abs(zr) * math.exp(lam * hh))
        bad = abs(dth) > guard or dh > clock_tol
        if bad and lev >= max_depth:
            u = gen.random()
            dth += 2.0 * math.pi * _winding_number(abs(zl) * abs(zr) * math.exp(lam * hh) / ah, dth, u)
            if not math.isfinite(dth):
                raise RefinementExhausted("winding of the deepest bridge is not finite")
            bad = False
        if bad:
            g = complex_normals(gen, 1)[0]
            sm, zm = bridge_midpoint(zl, zr, hh, lam, g)
            stack[-1] = (zr, sr, lev + 1)
            stack.append((zm, sl + sm, lev + 1))
            n_split += 1
            continue
        out.append((sl, zl, dth))
        stack.pop()
        zl, sl = zr, sr
    return n_split


def track_winding(path: PlanarPath, guard_angle=GUARD_ANGLE, refiner: SeedSpec | None = None,
                  clock_tol=None, max_depth=MAX_DEPTH) -> WindingTrace:
    """Continuous winding of a stored path.

    Steps whose principal increment exceeds ``guard_angle`` are refined by
    exact bridge bisection, which needs ``path.kind`` in {BM, OU_EXACT}; draws
    come from ``refiner`` (default: the path seed's bridge sub-stream).  The
    clock test is off by default here since a stored path may be a
    deterministic curve; pass ``clock_tol`` to enable it.
    """
    if not 0 < guard_angle < math.pi:
        raise ValueError("guard angle must lie in (0, pi)")
    z = np.asarray(path.z, dtype=complex)
    t = path.grid.t
    r = np.abs(z)
    if np.any(r < 1e-300):
        raise ZeroPoint("path touched the numerical origin")
    d = arg_increments(z)
    lam = path.params.lam if path.kind is PathKind.OU_EXACT else 0.0
    bad = np.abs(d) > guard_angle
    if clock_tol is not None:
        h = np.diff(t)
        ah = h if lam == 0.0 else np.expm1(2 * lam * h) / (2 * lam)
        bad |= ah / (r[:-1] * r[1:] * np.exp(lam * h)) > clock_tol

    sub_t, sub_r, sub_d = t[:-1].copy(), r[:-1].copy(), d.copy()
    owner = np.arange(len(d))
    n_refined = 0
    if np.any(bad):
        if path.kind not in (PathKind.BM, PathKind.OU_EXACT):
            raise RefinementExhausted(f"cannot refine {path.kind.value} path, step exceeds guard")
        gen = (refiner or path.seed).generator(BRIDGE_DRAWS)
        tol = math.inf if clock_tol is None else clock_tol
        st, sr, sd, ow = [], [], [], []
        for k in range(len(d)):
            if not bad[k]:
                st.append(t[k]); sr.append(r[k]); sd.append(d[k]); ow.append(k)
                continue
            leaves = []
            n_refined += _refine_step(complex(z[k]), complex(z[k + 1]), t[k + 1] - t[k], lam,
                                      gen, guard_angle, tol, max_depth, leaves)
            for s, zl, dth in leaves:
                st.append(t[k] + s); sr.append(abs(zl)); sd.append(dth); ow.append(k)
        sub_t, sub_r, sub_d, owner = map(np.asarray, (st, sr, sd, ow))

    outside = sub_r >= 1.0
    dp = np.where(outside, sub_d, 0.0)
    dm = np.where(outside, 0.0, sub_d)
    n = len(t)
    plus = np.zeros(n)
    minus = np.zeros(n)
    plus[1:] = np.cumsum(np.bincount(owner, dp, minlength=n - 1))
    minus[1:] = np.cumsum(np.bincount(owner, dm, minlength=n - 1))
    theta = plus + minus
    return WindingTrace(path.grid, theta, np.log(r), plus, minus, sub_t, sub_r, sub_d, n_refined)


def decompose(trace: WindingTrace):
    """Terminal (theta_plus, theta_minus); their sum is the terminal winding."""
    return float(trace.theta_plus[-1]), float(trace.theta_minus[-1])


def nu_winding(trace: WindingTrace, path: PlanarPath, nu, small=False, lam=None):
    """Winding gated by |Z| >= s^nu (or |Z| <= s^{-nu} with ``small``).

    ``s`` is the Brownian clock ``alpha(t)`` and integration starts at the
    first grid time with ``alpha(t) >= 1``.  ``nu = -inf`` gives threshold 0.
    """
    if lam is None:
        lam = path.params.lam if path.kind is PathKind.OU_EXACT else 0.0
    a_grid = alpha_time(path.grid.t, lam)
    idx = int(np.searchsorted(a_grid, 1.0))
    if idx >= len(a_grid):
        return 0.0
    t_start = path.grid.t[idx]
    sel = trace.sub_t >= t_start
    s = np.asarray(alpha_time(trace.sub_t[sel], lam))
    r = trace.sub_r[sel]
    with np.errstate(divide="ignore"):
        if small:
            gate = np.log(r) <= -nu * np.log(s)
        else:
            gate = np.log(r) >= nu * np.log(s) if np.isfinite(nu) else (np.ones_like(r, bool) if nu < 0 else np.zeros_like(r, bool))
    return float(np.sum(np.where(gate, trace.sub_dtheta[sel], 0.0)))


def winding_identity_check(shared_bm: PlanarPath, lam, grid: TimeGrid | None = None):
    """max_k |theta^Z(t_k) - theta^B(alpha(t_k))| and the radial analogue.

    ``shared_bm`` lives on the alpha-image of the OU grid; the OU path is
    rebuilt as ``e^{-lam t} B(alpha(t))`` from the same points.
    """
    a = shared_bm.grid.t
    if grid is None:
        t = np.asarray(np.log1p(2 * lam * a) / (2 * lam)) if lam > 0 else a.copy()
        t[0] = 0.0
        grid = TimeGrid(t)
    from .core import OuParams
    z = np.exp(-lam * grid.t) * shared_bm.z
    ou = PlanarPath(grid, z, PathKind.OU_EXACT, OuParams(lam, shared_bm.z[0]), shared_bm.seed)
    tz = track_winding(ou)
    tb = track_winding(shared_bm)
    dev_theta = float(np.max(np.abs(tz.theta - tb.theta)))
    dev_r = float(np.max(np.abs(tz.log_r - (tb.log_r - lam * grid.t))))
    return dev_theta, dev_r


def interval_winding(path: PlanarPath, t0, t1=1.0, trace: WindingTrace | None = None):
    """Winding accumulated on (t0, t1], both taken as grid times."""
    t = path.grid.t
    if not (0.0 <= t0 <= t1):
        raise ValueError("need 0 <= t0 <= t1")
    i0 = int(np.searchsorted(t, t0 - 1e-12 * max(1.0, t0)))
    i1 = int(np.searchsorted(t, t1 - 1e-12 * max(1.0, t1)))
    if i0 >= len(t) or abs(t[i0] - t0) > 1e-9 * max(1.0, t0) or abs(t[i1] - t1) > 1e-9 * max(1.0, t1):
        raise ValueError("interval end points must be grid times")
    if np.any(np.abs(path.z[i0:i1 + 1]) < 1e-300):
        raise ZeroPoint("interval winding needs a path away from the origin")
    if trace is None:
        sub = PlanarPath(TimeGrid(t[i0:i1 + 1] - t[i0]), path.z[i0:i1 + 1], path.kind, path.params, path.seed)
        trace = track_winding(sub)
        return float(trace.theta[-1])
    return float(trace.theta[i1] - trace.theta[i0])


DISK, ANNULUS, CONSTANT = "disk", "annulus", "constant"


def indicator(kind, r1=1.0, r2=None):
    """Bounded test functions of |z| used for ergodic averages."""
    if kind == DISK:
        return lambda z: (np.abs(z) <= r1).astype(float)
    if kind == ANNULUS:
        return lambda z: ((np.abs(z) >= r1) & (np.abs(z) <= r2)).astype(float)
    if kind == CONSTANT:
        return lambda z: np.ones(np.shape(z))
    raise ValueError(f"unknown test function {kind}")


def ergodic_average(path: PlanarPath, f):
    """(1/T) sum_k f(z_k) dt_k over the path (left-point rule)."""
    if path.params.lam <= 0 and path.kind is PathKind.OU_EXACT:
        raise ValueError("ergodic averages need lambda > 0")
    if isinstance(f, tuple):
        f = indicator(*f)
    h = path.grid.steps
    return float(np.sum(f(path.z[:-1]) * h) / path.grid.horizon)


# ---------------------------------------------------------------- bridge winding numbers

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


@nb.njit(cache=True)
def _tail_g(b, x):
    """G(b) = int_0^inf exp(-x cosh u) b / (u^2 + b^2) du for b >= 0.

    Each panel is integrated in s = atan(u / b), which flattens the
    b / (u^2 + b^2) peak; panels double in u up to 1, then have width 1/2.
    """
    if b == 0.0:
        return 0.5 * math.pi * math.exp(-x)
    umax = math.acosh(max(40.0 / x, 1.0 + 1e-12))
    total = 0.0
    ua = 0.0
    ub = min(b, 1.0, umax)
    while ua < umax:
        sa = math.atan(ua / b)
        sb = math.atan(ub / b)
        half = 0.5 * (sb - sa)
        mid = 0.5 * (sb + sa)
        acc = 0.0
        for i in range(_GL_X.shape[0]):
            u = b * math.tan(mid + half * _GL_X[i])
            acc += _GL_W[i] * math.exp(-x * math.cosh(u))
        total += half * acc
        ua = ub
        if ub < 1.0:
            ub = min(2.0 * ub, 1.0, umax)
        else:
            ub = min(ub + 0.5, umax)
    return total


@nb.njit(cache=True)
def _winding_number(x, phi, u):
    """Number of extra full turns of a planar bridge, drawn from its exact law.

    For BM from z_a to z_b over time h, with x = |z_a||z_b|/h and principal
    angle phi, the continuous angle is phi + 2 pi k with
    P(k >= m) = A G(phi + (2m-1) pi) and P(k <= -m) = A G((2m-1) pi - phi),
    m >= 1, A = exp(-x cos phi) / pi (heat kernel on the covering of the
    punctured plane).  ``u`` is uniform on (0, 1).
    """
    if x > 40.0:
        return 0
    A = math.exp(-x * math.cos(phi)) / math.pi
    gp = A * _tail_g(math.pi + phi, x)
    if u < gp:
        y = u
        sgn = 1.0
        off = phi
    else:
        gm = A * _tail_g(math.pi - phi, x)
        if u >= gp + gm:
            return 0
        y = u - gp
        sgn = -1.0
        off = -phi
    # largest m >= 1 with A G(off + (2m - 1) pi) > y
    lo = 1
    hi = 2
    while hi < (1 << 50) and A * _tail_g(off + (2 * hi - 1) * math.pi, x) > y:
        lo = hi
        hi *= 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if A * _tail_g(off + (2 * mid - 1) * math.pi, x) > y:
            lo = mid
        else:
            hi = mid
    return int(sgn) * lo


@nb.njit(cache=True)
def _cover_q(x, psi):
    """Heat kernel of the bridge on the covering surface, up to a factor free of psi.

    q(psi) = exp(x cos psi) 1(|psi| < pi) + (G(psi - pi) - G(psi + pi)) / pi with
    G extended as an odd function; summing q over the sheets psi = phi + 2 pi k
    gives exp(x cos phi), the planar kernel.
    """
    a = abs(psi)
    base = math.exp(x * math.cos(a)) if a < math.pi else 0.0
    b = a - math.pi
    g_lo = _tail_g(b, x) if b >= 0.0 else -_tail_g(-b, x)
    return max(base + (g_lo - _tail_g(a + math.pi, x)) / math.pi, 0.0)


@nb.njit(cache=True)
def _cover_cross(x, psi, b):
    """P(the lifted angle of the bridge reaches level b | it ends at psi).

    Reflection in the ray at angle b is an isometry of the covering surface,
    so the probability is q(2b - psi) / q(psi) when psi lies on the near side.
    """
    if (b > 0.0 and psi >= b) or (b < 0.0 and psi <= b):
        return 1.0
    q0 = _cover_q(x, psi)
    if q0 <= 0.0:
        return 1.0
    return min(1.0, _cover_q(x, 2.0 * b - psi) / q0)


def bridge_cross_probability(x, psi, b):
    """Python wrapper of the covering-surface crossing probability."""
    return float(_cover_cross(float(x), float(psi), float(b)))


def bridge_winding_number(x, phi, u):
    """Python wrapper of the exact bridge winding-number sampler."""
    return int(_winding_number(float(x), float(phi), float(u)))


# ---------------------------------------------------------------- batch kernel

@nb.njit(cache=True, inline="always")
def _clock(h, lam):
    if lam == 0.0:
        return h
    return math.expm1(2.0 * lam * h) / (2.0 * lam)


@nb.njit(cache=True, inline="always")
def _log_alpha(t, lam):
    if lam == 0.0:
        return math.log(t)
    x = 2.0 * lam * t
    if x > 30.0:
        return x - math.log(2.0 * lam) + math.log1p(-math.exp(-x))
    return math.log(math.expm1(x) / (2.0 * lam))


@nb.njit(cache=True)
def _kernel(tg, lam, z_init, horizon, pool, ptr, p_begin,
            guard, clock_tol, max_depth, exit_mode, c, barrier_res, barrier_p,
            nu_vals, nu_start, rec_idx,
            theta_o, plus_o, logr_o, nu_big_o, nu_small_o,
            rec_th_o, rec_pl_o, rec_lr_o, t_exit_o, status_o, nref_o, ndeep_o):
    n_paths = z_init.shape[0]
    K = tg.shape[0] - 1
    n_pool = pool.shape[0]
    n_nu = nu_vals.shape[0]
    n_rec = rec_idx.shape[0]
    # stack of pending right end points; st_h[j] is the duration of the
    # interval ending at entry j, measured from the entry above it
    st_z = np.empty(max_depth + 2, dtype=np.complex128)
    st_h = np.empty(max_depth + 2)
    st_l = np.empty(max_depth + 2, dtype=np.int64)
    big = np.zeros(max(n_nu, 1))
    small = np.zeros(max(n_nu, 1))
    res2 = (barrier_res * c) ** 2
    for p in range(p_begin, n_paths):
        ptr0 = ptr
        zl = z_init[p]
        tl = tg[0]
        plus = 0.0
        minus = 0.0
        for j in range(n_nu):
            big[j] = 0.0
            small[j] = 0.0
        nref = 0
        ndeep = 0
        status = 0
        t_exit = math.inf
        done = False
        starved = False
        ir = 0
        while ir < n_rec and rec_idx[ir] == 0:
            rec_th_o[p, ir] = 0.0
            rec_pl_o[p, ir] = 0.0
            rec_lr_o[p, ir] = math.log(abs(zl))
            ir += 1
        Tp = horizon[p]
        for k in range(K):
            t_next = tg[k + 1]
            last = False
            if t_next >= Tp:
                t_next = Tp
                last = True
            h = t_next - tg[k]
            if h <= 0.0:
                break
            if ptr + 2 > n_pool:
                starved = True
                break
            decay = math.exp(-lam * h)
            zb = decay * zl + math.sqrt(_clock(h, lam)) * decay * complex(pool[ptr], pool[ptr + 1])
            ptr += 2
            nu_on = n_nu > 0 and k >= nu_start
            top = 0
            st_z[0] = zb
            st_h[0] = h
            st_l[0] = 0
            while top >= 0:
                zr = st_z[top]
                hh = st_h[top]
                lev = st_l[top]
                w = zr * zl.conjugate()
                dth = math.atan2(w.imag, w.real)
                ah = _clock(hh, lam)
                rl = abs(zl)
                wr = abs(zr) * math.exp(lam * hh)
                dH = ah / (rl * wr)
                bad = abs(dth) > guard or dH > clock_tol
                split = bad
                p_up = 0.0
                p_dn = 0.0
                theta_l = plus + minus
                if exit_mode != 0 and not bad:
                    # crossing probabilities of the angle bridge, run at the
                    # Bessel clock dH; a right end beyond a barrier counts as 1
                    du = c - theta_l
                    dv = c - (theta_l + dth)
                    if dv <= 0.0:
                        p_up = 1.0
                    elif du > 0.0:
                        p_up = math.exp(-2.0 * du * dv / dH)
                    if exit_mode == 2:
                        du = c + theta_l
                        dv = c + theta_l + dth
                        if dv <= 0.0:
                            p_dn = 1.0
                        elif du > 0.0:
                            p_dn = math.exp(-2.0 * du * dv / dH)
                    if p_up + p_dn > barrier_p and dH > res2:
                        split = True
                if split and lev >= max_depth:
                    split = False
                    if bad:
                        # too close to the origin to resolve by bisection:
                        # add the exact number of extra turns of this bridge
                        if ptr + 1 > n_pool:
                            starved = True
                            break
                        u = 0.5 * math.erfc(-pool[ptr] / math.sqrt(2.0))
                        ptr += 1
                        dth += 2.0 * math.pi * _winding_number(rl * wr / ah, dth, u)
                        ndeep += 1
                        if not (math.isfinite(dth) and rl > 1e-300):
                            status = 1
                            done = True
                            break
                        if exit_mode != 0:
                            # the unresolved bridge may overshoot a barrier
                            # between its end points: exact reflection on the cover
                            p_up = _cover_cross(rl * wr / ah, dth, c - theta_l)
                            if exit_mode == 2:
                                p_dn = _cover_cross(rl * wr / ah, dth, -c - theta_l)
                if split:
                    if ptr + 2 > n_pool:
                        starved = True
                        break
                    g = complex(pool[ptr], pool[ptr + 1])
                    ptr += 2
                    sm = hh * 0.5 if lam == 0.0 else math.log1p(lam * ah) / (2.0 * lam)
                    zm = math.exp(-lam * sm) * (0.5 * (zl + zr * math.exp(lam * hh)) + math.sqrt(0.25 * ah) * g)
                    st_h[top] = hh - sm
                    top += 1
                    st_z[top] = zm
                    st_h[top] = sm
                    st_l[top] = lev + 1
                    st_l[top - 1] = lev + 1
                    nref += 1
                    continue
                # leaf: exit checks, then accumulate
                if exit_mode != 0:
                    th_r = theta_l + dth
                    f = -1.0
                    side = c
                    if th_r >= c:
                        f = (c - theta_l) / dth
                    elif exit_mode == 2 and th_r <= -c:
                        f = (-c - theta_l) / dth
                        side = -c
                    pcross = p_up + p_dn
                    if f < 0.0 and pcross > 1e-12:
                        # endpoints inside: the bridge may still have touched a
                        # barrier (the double-barrier sum is a first-order bound)
                        if ptr + 1 > n_pool:
                            starved = True
                            break
                        u = 0.5 * math.erfc(-pool[ptr] / math.sqrt(2.0))
                        ptr += 1
                        if u < pcross:
                            f = 0.5
                            if u >= p_up:
                                side = -c
                    if f >= 0.0:
                        f = min(max(f, 0.0), 1.0)
                        if lam == 0.0:
                            t_exit = tl + f * hh
                        else:
                            t_exit = tl + math.log1p(2.0 * lam * f * ah) / (2.0 * lam)
                        if rl >= 1.0:
                            plus += side - theta_l
                        else:
                            minus += side - theta_l
                        done = True
                        break
                if rl >= 1.0:
                    plus += dth
                else:
                    minus += dth
                if nu_on:
                    lr = math.log(rl)
                    la = _log_alpha(tl, lam)
                    for j in range(n_nu):
                        if lr >= nu_vals[j] * la:
                            big[j] += dth
                        if lr <= -nu_vals[j] * la:
                            small[j] += dth
                zl = zr
                tl = tl + hh
                top -= 1
            if starved or done:
                break
            tl = t_next
            while ir < n_rec and rec_idx[ir] == k + 1:
                rec_th_o[p, ir] = plus + minus
                rec_pl_o[p, ir] = plus
                rec_lr_o[p, ir] = math.log(abs(zl))
                ir += 1
            if last:
                break
        if starved:
            return p, ptr0
        if exit_mode != 0 and status == 0 and not done:
            status = 2
        while ir < n_rec:
            rec_th_o[p, ir] = plus + minus
            rec_pl_o[p, ir] = plus
            rec_lr_o[p, ir] = math.log(abs(zl))
            ir += 1
        theta_o[p] = plus + minus
        plus_o[p] = plus
        logr_o[p] = math.log(abs(zl))
        for j in range(n_nu):
            nu_big_o[p, j] = big[j]
            nu_small_o[p, j] = small[j]
        t_exit_o[p] = t_exit
        status_o[p] = status
        nref_o[p] = nref
        ndeep_o[p] = ndeep
    return n_paths, ptr


@dataclass
class BatchResult:
    theta: np.ndarray
    theta_plus: np.ndarray
    log_r: np.ndarray
    nu_big: np.ndarray
    nu_small: np.ndarray
    rec_theta: np.ndarray
    rec_plus: np.ndarray
    rec_log_r: np.ndarray
    t_exit: np.ndarray
    status: np.ndarray
    n_refined: np.ndarray
    n_deep: np.ndarray

    @property
    def theta_minus(self):
        return self.theta - self.theta_plus

    @property
    def exhausted_fraction(self):
        return float(np.mean(self.status == EXHAUSTED))

    @property
    def censored_fraction(self):
        return float(np.mean(self.status == CENSORED))


CHUNK = 20000
POOL_MAX = 1 << 22


def run_batch(t_grid, lam, n_paths, master_seed, z0=1.0 + 0j, horizon=None, stream_base=0,
              guard=GUARD_ANGLE, clock_tol=CLOCK_TOL, max_depth=MAX_DEPTH,
              exit_mode=EXIT_NONE, c=0.0, barrier_res=BARRIER_RES, barrier_p=BARRIER_P,
              nu_vals=(), rec_idx=(), chunk=CHUNK):
    """Simulate ``n_paths`` OU (``lam > 0``) or BM (``lam = 0``) paths on ``t_grid``.

    Paths are generated by exact transitions, refined by exact bridges and
    never stored.  Path ``i`` uses the Philox stream
    ``SeedSpec(master_seed, stream_base + i // chunk)`` so results do not depend
    on how the work is split.  ``z0`` and ``horizon`` may be per-path arrays;
    a path stops at its horizon (inf: end of grid), at its cone exit, or when
    refinement is exhausted.
    """
    tg = np.ascontiguousarray(t_grid, dtype=float)
    z_all = np.broadcast_to(np.asarray(z0, dtype=complex), (n_paths,))
    if np.any(np.abs(z_all) == 0.0):
        raise ZeroPoint("paths must start away from the origin")
    hz_all = np.broadcast_to(np.asarray(np.inf if horizon is None else horizon, dtype=float), (n_paths,))
    nu_vals = np.asarray(nu_vals, dtype=float).reshape(-1)
    rec_idx = np.asarray(rec_idx, dtype=np.int64).reshape(-1)
    if np.any(np.diff(rec_idx) < 0):
        raise ValueError("record indices must be sorted")
    a = alpha_time(tg, lam)
    nu_start = int(np.searchsorted(a, 1.0))
    n_nu, n_rec = nu_vals.size, rec_idx.size
    out = BatchResult(
        theta=np.empty(n_paths), theta_plus=np.empty(n_paths), log_r=np.empty(n_paths),
        nu_big=np.empty((n_paths, n_nu)), nu_small=np.empty((n_paths, n_nu)),
        rec_theta=np.empty((n_paths, n_rec)), rec_plus=np.empty((n_paths, n_rec)),
        rec_log_r=np.empty((n_paths, n_rec)), t_exit=np.empty(n_paths),
        status=np.empty(n_paths, dtype=np.int64), n_refined=np.empty(n_paths, dtype=np.int64),
        n_deep=np.empty(n_paths, dtype=np.int64))
    steps = len(tg) - 1
    for ci, lo in enumerate(range(0, n_paths, chunk)):
        hi = min(lo + chunk, n_paths)
        m = hi - lo
        gen = SeedSpec(master_seed, stream_base + ci).generator(0)
        pool_n = int(min(POOL_MAX, max(4096, 2.2 * steps * m)))
        pool = gen.standard_normal(pool_n)
        sl = slice(lo, hi)
        views = (out.theta[sl], out.theta_plus[sl], out.log_r[sl], out.nu_big[sl], out.nu_small[sl],
                 out.rec_theta[sl], out.rec_plus[sl], out.rec_log_r[sl], out.t_exit[sl],
                 out.status[sl], out.n_refined[sl], out.n_deep[sl])
        zc = np.ascontiguousarray(z_all[lo:hi])
        hc = np.ascontiguousarray(hz_all[lo:hi])
        p, ptr = 0, 0
        while True:
            p, ptr = _kernel(tg, float(lam), zc, hc, pool, ptr, p,
                             guard, clock_tol, max_depth, exit_mode, float(c), barrier_res, barrier_p,
                             nu_vals, nu_start, rec_idx, *views)
            if p >= m:
                break
            # pool ran out inside path p: keep its unread draws, continue the stream
            pool = np.concatenate([pool[ptr:], gen.standard_normal(pool_n)])
            ptr = 0
    return out
