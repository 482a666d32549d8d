"""Rank-based tests and effect sizes.

Only the reference distributions (chi-squared, t, normal) come from scipy;
statistics, ranks and the exact Wilcoxon null are computed here.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import stats as _dist

log = logging.getLogger(__name__)

EXACT_WILCOXON_MAX_N = 12
MIN_WILCOXON_N = 6


class StatsError(ValueError):
    pass


class InsufficientDataError(StatsError):
    pass


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    df: Optional[int] = None
    n: Optional[int] = None

    __test__ = False  # keep pytest from collecting this

    def __post_init__(self):
        object.__setattr__(self, "p_value", float(min(1.0, max(0.0, self.p_value))))


def rankdata(values: Sequence[float]) -> np.ndarray:
    """Ranks starting at 1 with ties given their average rank."""
    a = np.asarray(values, dtype=float)
    order = np.argsort(a, kind="mergesort")
    sorted_a = a[order]
    ranks = np.empty(len(a))
    i = 0
    n = len(a)
    while i < n:
        j = i
        while j + 1 < n and sorted_a[j + 1] == sorted_a[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _tie_sum(values: np.ndarray) -> float:
    _, counts = np.unique(values, return_counts=True)
    return float(np.sum(counts.astype(float) ** 3 - counts))


def kruskal_wallis(groups: Sequence[Sequence[float]]) -> TestResult:
    """Kruskal-Wallis H with tie correction; p from chi-squared with k-1 df."""
    if len(groups) < 2:
        raise StatsError("need at least two groups")
    arrays = [np.asarray(g, dtype=float) for g in groups]
    if any(len(g) == 0 for g in arrays):
        raise StatsError("every group must be non-empty")
    if any(len(g) < 5 for g in arrays):
        log.warning("Kruskal-Wallis with fewer than 5 observations in a group; "
                    "chi-squared approximation is rough")
    pooled = np.concatenate(arrays)
    n = len(pooled)
    ranks = rankdata(pooled)
    h = 0.0
    start = 0
    for g in arrays:
        r = ranks[start:start + len(g)]
        start += len(g)
        h += r.sum() ** 2 / len(g)
    h = 12.0 / (n * (n + 1)) * h - 3.0 * (n + 1)
    correction = 1.0 - _tie_sum(pooled) / (n ** 3 - n) if n > 1 else 0.0
    df = len(arrays) - 1
    if correction <= 0:
        return TestResult(0.0, 1.0, df=df, n=n)
    h /= correction
    return TestResult(float(h), float(_dist.chi2.sf(h, df)), df=df, n=n)


def holm_bonferroni(p_values: Sequence[float]) -> list:
    p = np.asarray(p_values, dtype=float)
    if np.any((p < 0) | (p > 1)):
        raise StatsError("p-values must lie in [0, 1]")
    m = len(p)
    order = np.argsort(p, kind="mergesort")
    adjusted = np.empty(m)
    running = 0.0
    for rank, idx in enumerate(order):
        running = max(running, (m - rank) * p[idx])
        adjusted[idx] = min(1.0, running)
    return adjusted.tolist()


def cliffs_delta(a: Sequence[float], b: Sequence[float]) -> float:
    """P(a > b) - P(a < b) over all cross pairs, counted exactly via sorting."""
    a = np.asarray(a, dtype=float)
    b = np.sort(np.asarray(b, dtype=float))
    if len(a) == 0 or len(b) == 0:
        raise StatsError("both samples must be non-empty")
    greater = np.searchsorted(b, a, side="left").sum()
    less = (len(b) - np.searchsorted(b, a, side="right")).sum()
    return float((int(greater) - int(less)) / (len(a) * len(b)))


def effect_magnitude(delta: float) -> str:
    d = abs(delta)
    if d < 0.147:
        return "negligible"
    if d < 0.33:
        return "small"
    if d < 0.474:
        return "medium"
    return "large"


def _exact_signed_rank_counts(doubled_ranks: np.ndarray) -> np.ndarray:
    """Number of sign assignments giving each value of the doubled W+ sum."""
    total = int(doubled_ranks.sum())
    counts = np.zeros(total + 1, dtype=np.int64)
    counts[0] = 1
    for r in doubled_ranks.astype(int):
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[:total + 1 - r]
        counts = counts + shifted
    return counts


def wilcoxon_signed_rank(x: Sequence[float], y: Sequence[float], alternative: str = "two-sided") -> TestResult:
    """Paired signed-rank test on ``x - y``; zero differences are dropped.

    ``alternative`` is one of ``two-sided``, ``greater`` (x tends to exceed y)
    or ``less``. The statistic is W+, the rank sum of positive differences.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise StatsError("paired samples must have equal length")
    d = x - y
    d = d[d != 0]
    n = len(d)
    if n < MIN_WILCOXON_N:
        raise InsufficientDataError(f"only {n} non-zero differences; need {MIN_WILCOXON_N}")
    ranks = rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    mean = n * (n + 1) / 4.0

    if n <= EXACT_WILCOXON_MAX_N:
        doubled = np.rint(2 * ranks).astype(int)
        counts = _exact_signed_rank_counts(doubled)
        support = np.arange(len(counts)) / 2.0
        total = counts.sum()
        obs = w_plus
        if alternative == "greater":
            p = counts[support >= obs - 1e-9].sum() / total
        elif alternative == "less":
            p = counts[support <= obs + 1e-9].sum() / total
        else:
            p = counts[np.abs(support - mean) >= abs(obs - mean) - 1e-9].sum() / total
        return TestResult(w_plus, float(p), n=n)

    var = n * (n + 1) * (2 * n + 1) / 24.0 - _tie_sum(np.abs(d)) / 48.0
    sd = math.sqrt(var)
    diff = w_plus - mean
    if alternative == "greater":
        p = _dist.norm.sf((diff - 0.5) / sd)
    elif alternative == "less":
        p = _dist.norm.cdf((diff + 0.5) / sd)
    else:
        z = max(0.0, abs(diff) - 0.5) / sd
        p = 2 * _dist.norm.sf(z)
    return TestResult(w_plus, float(p), n=n)


def spearman(x: Sequence[float], y: Sequence[float]) -> TestResult:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) != len(y) or len(x) < 3:
        raise StatsError("need two samples of equal length >= 3")
    rx, ry = rankdata(x), rankdata(y)
    rx -= rx.mean()
    ry -= ry.mean()
    sxx, syy = float(rx @ rx), float(ry @ ry)
    if sxx == 0 or syy == 0:
        raise StatsError("correlation undefined: an input has constant ranks")
    rho = float(rx @ ry) / math.sqrt(sxx * syy)
    rho = max(-1.0, min(1.0, rho))
    n = len(x)
    if abs(rho) == 1.0:
        p = 0.0
    else:
        t = rho * math.sqrt((n - 2) / (1 - rho * rho))
        p = 2 * _dist.t.sf(abs(t), n - 2)
    return TestResult(rho, float(p), df=n - 2, n=n)


def percentile_nearest_rank(xs: Sequence[float], q: float) -> float:
    if len(xs) == 0:
        raise StatsError("percentile of an empty sample")
    if not 0 < q <= 100:
        raise StatsError("q must lie in (0, 100]")
    s = np.sort(np.asarray(xs, dtype=float))
    rank = math.ceil(q * len(s) / 100.0)
    return float(s[max(rank, 1) - 1])


def iqr(xs: Sequence[float]) -> float:
    return float(np.subtract(*np.percentile(np.asarray(xs, float), [75, 25])))
