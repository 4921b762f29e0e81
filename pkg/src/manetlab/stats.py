"""Per-sample summaries and the two-sided Wilcoxon rank-sum test.

Signs follow the minimisation convention of the comparison tables: ``+`` means
the first sample is significantly better (lower), ``-`` significantly worse,
``=`` no significant difference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

EXACT_MAX_SIZE = 8


@dataclass(frozen=True)
class SampleSet:
    values: tuple[float, ...]
    function: int = 0
    dimension: int = 0
    algorithm: str = ""

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise ValueError("empty sample")
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("sample contains non-finite values")
        if min(vals) < 0:
            raise ValueError("sample values are error-to-optimum and must be >= 0")
        object.__setattr__(self, "values", vals)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.values)


@dataclass(frozen=True)
class SummaryRow:
    function: int
    dimension: int
    best: float
    worst: float
    mean: float
    median: float
    std: float


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float  # rank sum of the first sample
    p_value: float
    sign: str
    method: str


def summarize(s: SampleSet) -> SummaryRow:
    v = np.sort(s.array)
    n = len(v)
    mid = n // 2
    median = v[mid] if n % 2 else 0.5 * (v[mid - 1] + v[mid])
    std = float(np.std(v, ddof=1)) if n > 1 else 0.0
    return SummaryRow(s.function, s.dimension, float(v[0]), float(v[-1]), float(np.mean(v)), float(median), std)


def midranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing the mean of their positions."""
    order = np.argsort(values, kind="mergesort")
    sorted_vals = values[order]
    ranks = np.empty(len(values))
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _exact_p(ranks: np.ndarray, n1: int, observed: float) -> float:
    """Two-sided p by enumerating every size-``n1`` subset of the pooled ranks.

    Mid-ranks are half-integers, so doubled ranks are integers and the null
    distribution of the doubled rank sum is counted by subset-sum DP.
    """
    N = len(ranks)
    doubled = np.rint(2 * ranks).astype(int)
    total = int(doubled.sum())
    # counts[k, s]: number of k-subsets with doubled sum s
    counts = np.zeros((n1 + 1, total + 1))
    counts[0, 0] = 1.0
    for r in doubled:
        counts[1:, r:] += counts[:-1, : total + 1 - r].copy()
    dist = counts[n1]
    sums = np.arange(total + 1)
    expected2 = n1 * (N + 1)
    dev = abs(2 * observed - expected2)
    hits = dist[np.abs(sums - expected2) >= dev - 1e-9].sum()
    return float(hits / math.comb(N, n1))


def _normal_p(ranks: np.ndarray, n1: int, n2: int, observed: float) -> float:
    N = n1 + n2
    expected = n1 * (N + 1) / 2.0
    _, counts = np.unique(ranks, return_counts=True)
    ties = float(np.sum(counts**3 - counts))
    var = n1 * n2 / 12.0 * ((N + 1) - ties / (N * (N - 1)))
    if var <= 0:
        return 1.0
    z = max(abs(observed - expected) - 0.5, 0.0) / math.sqrt(var)
    return min(1.0, math.erfc(z / math.sqrt(2.0)))


def wilcoxon_rank_sum(a: SampleSet, b: SampleSet, alpha: float = 0.05, method: str = "auto") -> WilcoxonResult:
    """Two-sided rank-sum test of ``a`` against ``b``.

    ``method`` is ``"exact"`` (full enumeration), ``"normal"`` (tie-corrected
    variance, continuity correction) or ``"auto"``: exact when both samples
    have at most 8 values, normal otherwise.
    """
    x, y = a.array, b.array
    n1, n2 = len(x), len(y)
    pooled = np.concatenate([x, y])
    ranks = midranks(pooled)
    w = float(ranks[:n1].sum())
    if method == "auto":
        method = "exact" if max(n1, n2) <= EXACT_MAX_SIZE else "normal"
    if np.all(pooled == pooled[0]):
        p = 1.0
    elif method == "exact":
        p = _exact_p(ranks, n1, w)
    elif method == "normal":
        p = _normal_p(ranks, n1, n2, w)
    else:
        raise ValueError(f"unknown method {method!r}")

    sign = "="
    if p < alpha:
        ma, mb = float(np.median(x)), float(np.median(y))
        if ma == mb:
            # medians tie: fall back to mean ranks
            ma, mb = w / n1, float(ranks[n1:].sum()) / n2
        if ma < mb:
            sign = "+"
        elif ma > mb:
            sign = "-"
    return WilcoxonResult(w, p, sign, method)


def synthetic_sample(row: SummaryRow, n: int = 51, seed: int = 0) -> SampleSet:
    """Stand-in sample for a summary row.

    Normal draws with the row's mean and std, clipped to [best, worst].  Only
    an approximation: the raw per-run values behind a summary row are unavailable.
    """
    rng = np.random.default_rng(seed)
    vals = np.clip(rng.normal(row.mean, row.std, n), row.best, row.worst)
    vals = np.maximum(vals, 0.0)
    return SampleSet(tuple(vals), row.function, row.dimension, "synthetic")
