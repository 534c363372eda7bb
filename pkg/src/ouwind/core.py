"""Domain types, the deterministic OU clock, angle primitives and seeding.

The OU clock maps OU time ``t`` to the Brownian time ``(exp(2 lam t) - 1) / (2 lam)``
under which ``Z_t = exp(-lam t) B(alpha(t))``.  ``lam = 0`` is treated as a
regular case (the clock is the identity and the OU process is planar BM).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ZeroPoint

# below this the expm1/log1p forms are replaced by their two-term series
SMALL_LAMBDA = 1e-12
# modulus floor for angle increments; numeric safety only
ORIGIN_FLOOR = 1e-300


@dataclass(frozen=True)
class OuParams:
    lam: float
    z0: complex = 1.0 + 0.0j
    alpha: float = 2.0

    def __post_init__(self):
        if not (self.lam >= 0.0 and math.isfinite(self.lam)):
            raise ValueError(f"lambda must be finite and >= 0, got {self.lam}")
        if not abs(self.z0) > 0.0:
            raise ValueError("z0 must be nonzero")
        if not (0.0 < self.alpha <= 2.0):
            raise ValueError(f"alpha must lie in (0, 2], got {self.alpha}")
        object.__setattr__(self, "z0", complex(self.z0))

    def to_dict(self):
        return {"lambda": self.lam, "z0": [self.z0.real, self.z0.imag], "alpha": self.alpha}

    @classmethod
    def from_dict(cls, d):
        z0 = d.get("z0", [1.0, 0.0])
        return cls(lam=float(d["lambda"]), z0=complex(z0[0], z0[1]), alpha=float(d.get("alpha", 2.0)))


@dataclass(frozen=True)
class TimeGrid:
    t: np.ndarray = field(repr=False)

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        if t.ndim != 1 or t.size < 2:
            raise ValueError("time grid needs at least two points")
        if t[0] != 0.0:
            raise ValueError("time grid must start at 0")
        if not np.all(np.diff(t) > 0):
            raise ValueError("time grid must be strictly increasing")
        if not np.all(np.isfinite(t)):
            raise ValueError("time grid must be finite")
        t.setflags(write=False)
        object.__setattr__(self, "t", t)

    def __len__(self):
        return self.t.size

    @property
    def horizon(self):
        return float(self.t[-1])

    @property
    def steps(self):
        return np.diff(self.t)

    @classmethod
    def uniform(cls, horizon, step):
        """Uniform grid on [0, horizon]; the last step is shortened if needed."""
        n = int(math.ceil(horizon / step - 1e-9))
        t = np.arange(n + 1, dtype=float) * step
        t[-1] = horizon
        return cls(t)

    @classmethod
    def for_ou(cls, horizon, lam, max_step=0.01):
        """Uniform OU-time grid with step <= min(max_step, max_step / lam)."""
        step = max_step / max(lam, 1.0)
        return cls.uniform(horizon, step)

    @classmethod
    def geometric(cls, horizon, start=1.0, first_step=0.01, ratio=1.02):
        """Uniform steps on [0, start], geometric growth by ``ratio`` afterwards.

        Suited to planar BM run to very large times: the angular increment per
        step stays of order ``sqrt(ratio - 1)``.
        """
        start = min(start, horizon)
        head = np.arange(0.0, start, first_step)
        n_tail = int(math.ceil(math.log(horizon / start) / math.log(ratio))) if horizon > start else 0
        tail = start * ratio ** np.arange(n_tail + 1)
        t = np.concatenate([head, tail])
        t = t[t < horizon]
        return cls(np.append(t, horizon))


@dataclass(frozen=True)
class SeedSpec:
    master_seed: int
    stream_id: int = 0

    def generator(self, purpose=0):
        """Counter-based (Philox) generator for this stream.

        ``purpose`` separates independent sub-streams of one stream, e.g. base
        increments versus bridge refinement draws.
        """
        ss = np.random.SeedSequence([self.master_seed & (2**64 - 1), self.stream_id & (2**64 - 1), purpose])
        return np.random.Generator(np.random.Philox(ss))

    def child(self, stream_id):
        return SeedSpec(self.master_seed, stream_id)


def alpha_time(t, lam):
    """OU-to-BM clock ``(exp(2 lam t) - 1) / (2 lam)``; identity at ``lam = 0``."""
    t = np.asarray(t, dtype=float) if not np.isscalar(t) else float(t)
    if lam == 0.0:
        return t
    if lam < SMALL_LAMBDA:
        return t * (1.0 + lam * t)
    # overflow to inf is the intended value for very long OU horizons
    with np.errstate(over="ignore"):
        return np.expm1(2.0 * lam * t) / (2.0 * lam)


def alpha_inverse(tau, lam):
    """Inverse clock ``log(1 + 2 lam tau) / (2 lam)``."""
    tau = np.asarray(tau, dtype=float) if not np.isscalar(tau) else float(tau)
    if lam == 0.0:
        return tau
    if lam < SMALL_LAMBDA:
        return tau * (1.0 - lam * tau)
    return np.log1p(2.0 * lam * tau) / (2.0 * lam)


def ou_variance(h, lam):
    """Per-coordinate variance of the OU transition over a step ``h``."""
    h = np.asarray(h, dtype=float) if not np.isscalar(h) else float(h)
    if lam == 0.0:
        return h
    if lam < SMALL_LAMBDA:
        return h * (1.0 - lam * h)
    return -np.expm1(-2.0 * lam * h) / (2.0 * lam)


def arg_increment(z_prev, z_next, floor=ORIGIN_FLOOR):
    """Principal argument of ``z_next / z_prev`` in (-pi, pi]."""
    z_prev = complex(z_prev)
    z_next = complex(z_next)
    if abs(z_prev) < floor or abs(z_next) < floor:
        raise ZeroPoint("path touched the numerical origin")
    w = z_next * z_prev.conjugate()
    return math.atan2(w.imag, w.real)


def arg_increments(z, floor=ORIGIN_FLOOR):
    """Vectorised principal-argument increments along a sequence of points."""
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z) < floor):
        raise ZeroPoint("path touched the numerical origin")
    return np.angle(z[1:] * np.conj(z[:-1]))


def scaling_factor(a, t, lam):
    """Factor ``k`` with ``Z_{a t} = k Z'_t`` in law for OU started at the origin.

    ``k = exp(-lam (a - 1) t) * sqrt((exp(2 lam a t) - 1) / (exp(2 lam t) - 1))``.
    Matching the Gaussian marginals requires ``k**2 * v(t) = v(a t)`` with
    ``v(s) = (1 - exp(-2 lam s)) / (2 lam)``, which this satisfies; ``a = 1``
    gives 1.  For a nonzero start point no such constant exists because the
    means decay at different rates.
    """
    if not (a > 0 and t > 0 and lam > 0):
        raise ValueError("a, t and lambda must be positive")
    ratio = math.expm1(2.0 * lam * a * t) / math.expm1(2.0 * lam * t)
    return math.exp(-lam * (a - 1.0) * t) * math.sqrt(ratio)


def scaling_factor_printed(a, t, lam):
    """The factor as it is usually printed, ``exp(-lam (1 + a) t) / sqrt(a) * sqrt(ratio)``.

    Kept for comparison only: at ``a = 1`` it gives ``exp(-2 lam t)`` instead
    of 1, so it does not match the marginals (see :func:`scaling_factor`).
    """
    if not (a > 0 and t > 0 and lam > 0):
        raise ValueError("a, t and lambda must be positive")
    ratio = math.expm1(2.0 * lam * a * t) / math.expm1(2.0 * lam * t)
    return math.exp(-lam * (1.0 + a) * t) / math.sqrt(a) * math.sqrt(ratio)
