"""Statistical checks used across the test suite and scenario reports.

Every test passes at ``p > ALPHA`` with ``ALPHA = 0.001``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import bits as bitops
from .errors import ShapeMismatch

ALPHA = 0.001


@dataclass(frozen=True)
class TestReport:
    name: str
    statistic: float
    p_value: float | None
    passed: bool
    sample_size: int
    sigma: float | None = None

    __test__ = False  # keep pytest from collecting this class

    def render(self) -> str:
        """One line in the shared ``key=value`` report format."""
        fields = [
            f"test={self.name}",
            f"n={self.sample_size}",
            f"statistic={self.statistic:.6g}",
            f"p={self.p_value:.6g}" if self.p_value is not None else "p=-",
            f"sigma={self.sigma:.4g}" if self.sigma is not None else "sigma=-",
            f"result={'PASS' if self.passed else 'FAIL'}",
        ]
        return " ".join(fields)


def normal_two_sided_p(z: float) -> float:
    return math.erfc(abs(z) / math.sqrt(2))


def chi2_sf(statistic: float, dof: int) -> float:
    return float(stats.chi2.sf(statistic, dof))


def monobit(bits) -> TestReport:
    b = bitops.as_bits(bits)
    n = b.size
    if n < 100:
        raise ShapeMismatch("monobit needs at least 100 bits")
    ones = int(b.sum())
    z = (2 * ones - n) / math.sqrt(n)
    p = normal_two_sided_p(z)
    return TestReport("monobit", z, p, p > ALPHA, n)


def chi_square_uniform(counts) -> TestReport:
    obs = np.asarray(counts, dtype=np.float64)
    d = obs.size
    total = obs.sum()
    if d < 2 or total < 5 * d:
        raise ShapeMismatch("chi-square needs >= 2 categories and total >= 5 per category")
    expected = total / d
    statistic = float(np.sum((obs - expected) ** 2) / expected)
    p = chi2_sf(statistic, d - 1)
    return TestReport("chi_square_uniform", statistic, p, p > ALPHA, int(total))


def chi_square_homogeneity(counts_a, counts_b) -> TestReport:
    """Two-sample test that two category histograms share one distribution."""
    table = np.vstack([np.asarray(counts_a), np.asarray(counts_b)]).astype(np.float64)
    keep = table.sum(axis=0) > 0
    table = table[:, keep]
    if table.shape[1] < 2:
        raise ShapeMismatch("need at least two occupied categories")
    statistic, p, dof, _ = stats.chi2_contingency(table, correction=False)
    return TestReport("chi_square_homogeneity", float(statistic), float(p), p > ALPHA, int(table.sum()))


def binomial_within(successes: int, trials: int, prob: float, n_sigma: float = 3.0) -> TestReport:
    """Pass iff the success count is within ``n_sigma`` binomial sigmas of ``trials * prob``."""
    mean = trials * prob
    sd = math.sqrt(trials * prob * (1 - prob))
    dist = abs(successes - mean) / sd if sd > 0 else (0.0 if successes == mean else math.inf)
    return TestReport(f"binomial_{n_sigma:g}sigma", successes / trials, None, dist <= n_sigma, trials, dist)


def histogram_ratio(samples_a, samples_b, coverage: float = 0.99, n_bins: int = 20) -> tuple[float, float]:
    """Largest bin-probability ratio between two samples, both directions.

    Bins are equal-mass under the pooled sample and span the central region,
    widened until each sample individually has at least ``coverage`` of its
    mass inside. Returns ``(max_ratio, covered_fraction)``.
    """
    a = np.asarray(samples_a, dtype=np.float64)
    b = np.asarray(samples_b, dtype=np.float64)
    pooled = np.concatenate([a, b])
    tail = (1 - coverage) / 2
    while True:
        edges = np.quantile(pooled, np.linspace(tail, 1 - tail, n_bins + 1))
        edges = np.unique(edges)
        ha, _ = np.histogram(a, edges)
        hb, _ = np.histogram(b, edges)
        covered = min(ha.sum() / a.size, hb.sum() / b.size)
        if covered >= coverage or tail <= 0:
            break
        tail = max(0.0, tail - 0.0005)
    pa, pb = ha / a.size, hb / b.size
    mask = (pa > 0) & (pb > 0)
    if not np.all(mask):
        return math.inf, float(covered)
    ratio = float(np.max(np.maximum(pa / pb, pb / pa)))
    return ratio, float(covered)
