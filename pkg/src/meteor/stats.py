"""Small statistics helpers: estimates with standard errors, intervals, tests."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats as sps


@dataclass(frozen=True)
class Estimate:
    mean: float
    stderr: float
    n_samples: int
    method: str = "MC"

    def within(self, target: float, k: float = 3.0) -> bool:
        return abs(self.mean - target) <= k * self.stderr

    def as_dict(self) -> dict:
        return asdict(self)


def exact(value: float) -> Estimate:
    return Estimate(float(value), 0.0, 0, "exact")


def iid_estimate(x) -> Estimate:
    x = np.asarray(x, dtype=np.float64).ravel()
    n = len(x)
    if n == 0:
        return Estimate(math.nan, math.nan, 0)
    se = float(x.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    return Estimate(float(x.mean()), se, n, "MC")


def batch_means(x, n_batches: int = 20) -> Estimate:
    """Mean of a correlated series with a batch-means standard error.

    The tail that does not fill a whole batch is dropped from the error
    estimate but kept in the mean.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    n = len(x)
    nb = min(n_batches, n)
    if nb < 2:
        return Estimate(float(x.mean()) if n else math.nan, math.inf, n, "batch-means")
    size = n // nb
    means = x[:nb * size].reshape(nb, size).mean(axis=1)
    return Estimate(float(x.mean()), float(means.std(ddof=1) / math.sqrt(nb)), n, "batch-means")


def ratio_batch_means(num, den, n_batches: int = 20) -> Estimate:
    """``sum(num) / sum(den)`` with a batch-means error from per-batch ratios."""
    num = np.asarray(num, dtype=np.float64).ravel()
    den = np.asarray(den, dtype=np.float64).ravel()
    n = len(num)
    nb = min(n_batches, n)
    r = float(num.sum() / den.sum())
    if nb < 2:
        return Estimate(r, math.inf, n, "batch-means")
    size = n // nb
    bn = num[:nb * size].reshape(nb, size).sum(axis=1)
    bd = den[:nb * size].reshape(nb, size).sum(axis=1)
    return Estimate(r, float((bn / bd).std(ddof=1) / math.sqrt(nb)), n, "batch-means")


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    if trials == 0:
        return 0.0, 1.0
    ci = sps.binomtest(int(successes), int(trials)).proportion_ci(confidence, method="wilson")
    return float(ci.low), float(ci.high)


def ks_distance(samples, cdf) -> float:
    """Two-sided KS statistic of ``samples`` against a scipy-style ``cdf``.

    Handles atoms in the data: with ties the empirical CDF jumps by the
    tie size, which :func:`scipy.stats.kstest` accounts for.
    """
    return float(sps.kstest(np.asarray(samples, dtype=np.float64), cdf).statistic)


def ks_pvalue(samples, cdf) -> float:
    return float(sps.kstest(np.asarray(samples, dtype=np.float64), cdf).pvalue)


def chi_square_uniform(counts) -> float:
    """p-value of a chi-square test of ``counts`` against equal cell probabilities."""
    return float(sps.chisquare(np.asarray(counts, dtype=np.float64)).pvalue)


def combined_stderr(*ests: Estimate) -> float:
    return math.sqrt(sum(e.stderr ** 2 for e in ests))
