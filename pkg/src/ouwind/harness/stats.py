"""Empirical distributions, KS distances and standard errors."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sps


@dataclass(frozen=True)
class EmpiricalDist:
    """Sorted sample set.  ``inf`` entries (censored draws) are allowed."""
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        x = np.sort(np.asarray(self.samples, dtype=float).ravel())
        if x.size < 2:
            raise ValueError("need at least two samples")
        if np.any(np.isnan(x)):
            raise ValueError("samples contain NaN")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)

    @property
    def n(self):
        return self.samples.size

    def ecdf(self, x):
        return np.searchsorted(self.samples, x, side="right") / self.n

    def quantile(self, p):
        """Order-statistic quantile (type 1); may be inf under censoring."""
        p = np.asarray(p, dtype=float)
        k = np.clip(np.ceil(p * self.n).astype(int) - 1, 0, self.n - 1)
        q = self.samples[k]
        return float(q) if q.ndim == 0 else q

    def half_iqr(self):
        return 0.5 * (self.quantile(0.75) - self.quantile(0.25))


def ks_distance(dist: EmpiricalDist, cdf) -> float:
    """sup |ECDF - F| evaluated on both sides of every jump."""
    x = dist.samples
    n = dist.n
    f = np.asarray(cdf(x), dtype=float)
    f = np.where(np.isposinf(x), 1.0, f)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


def ks_two_sample(a, b) -> float:
    return float(sps.ks_2samp(np.asarray(a), np.asarray(b)).statistic)


def ks_critical(n, alpha=0.01):
    """Asymptotic one-sample Kolmogorov quantile sqrt(-log(alpha/2)/2) / sqrt(n)."""
    return math.sqrt(-0.5 * math.log(alpha / 2)) / math.sqrt(n)


def mean_se(x):
    x = np.asarray(x, dtype=float)
    return float(np.mean(x)), float(np.std(x, ddof=1) / math.sqrt(x.size))


def proportion_se(p, n):
    return math.sqrt(max(p * (1 - p), 0.0) / n)


def median_se(dist: EmpiricalDist, density_at_median):
    """Asymptotic SE of the sample median, 1 / (2 f(m) sqrt(n))."""
    return 1.0 / (2.0 * density_at_median * math.sqrt(dist.n))
