"""ROC curves, AUC, the Wilcoxon signed-rank test, and summary statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "RocCurve",
    "WilcoxonResult",
    "FiveNumberSummary",
    "roc_curve",
    "auc",
    "wilcoxon_signed_rank",
    "five_number_summary",
    "mean_std",
]


@dataclass(frozen=True)
class RocCurve:
    """Tie-aware ROC staircase.

    thresholds[0] is +inf for the mandatory (0, 0) point; each later
    point i is the operating point "score >= thresholds[i]". Tied scores
    enter together, so they form a single (possibly diagonal) step.
    """

    thresholds: np.ndarray
    fpr: np.ndarray
    tpr: np.ndarray
    auc: float

    @property
    def points(self):
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))


@dataclass(frozen=True)
class WilcoxonResult:
    r_plus: float
    r_minus: float
    n_effective: int
    p_value: float
    method: str


@dataclass(frozen=True)
class FiveNumberSummary:
    min: float
    q1: float
    median: float
    q3: float
    max: float


def roc_curve(scores, labels) -> RocCurve:
    """ROC curve of outlier scores against binary labels (truthy = outlier).

    One point per distinct score, thresholds descending, preceded by the
    (0, 0) endpoint; the final point is always (1, 1). The stored AUC is
    the trapezoidal area, which on this staircase equals the pairwise
    win + half-tie count.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValueError("scores and labels must be equal-length vectors")
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC needs at least one outlier and one normal sample")

    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    y = labels[order]
    # indices where a run of equal scores ends
    last_of_run = np.nonzero(np.append(s[1:] != s[:-1], True))[0]
    cum_tp = np.cumsum(y)[last_of_run]
    cum_fp = (last_of_run + 1) - cum_tp
    tpr = np.concatenate([[0.0], cum_tp / n_pos])
    fpr = np.concatenate([[0.0], cum_fp / n_neg])
    thresholds = np.concatenate([[np.inf], s[last_of_run]])
    area = _trapezoid(fpr, tpr)
    return RocCurve(thresholds=thresholds, fpr=fpr, tpr=tpr, auc=area)


def _trapezoid(x, y) -> float:
    return float(0.5 * np.sum((x[1:] - x[:-1]) * (y[1:] + y[:-1])))


def auc(curve: RocCurve) -> float:
    """Trapezoidal area under the stored points."""
    return _trapezoid(curve.fpr, curve.tpr)


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """Ascending ranks starting at 1 with ties averaged."""
    order = np.argsort(values, kind="stable")
    sorted_vals = values[order]
    boundary = np.nonzero(np.append(sorted_vals[1:] != sorted_vals[:-1], True))[0]
    start = np.concatenate([[0], boundary[:-1] + 1])
    # averaged rank of a run [a, b] (0-based) is (a + b) / 2 + 1
    run_rank = (start + boundary) / 2.0 + 1.0
    run_len = boundary - start + 1
    ranks = np.empty(values.size)
    ranks[order] = np.repeat(run_rank, run_len)
    return ranks


def _exact_tail_p(ranks: np.ndarray, r_plus: float, r_minus: float) -> float:
    """P(R+ <= min) + P(R+ >= max) over all 2^n sign assignments.

    Computed by dynamic programming over rank sums, which enumerates the
    same distribution as brute force. Averaged ranks are multiples of
    0.5, so doubling makes them integers.
    """
    doubled = np.rint(2.0 * ranks).astype(np.int64)
    total = int(doubled.sum())
    ways = np.zeros(total + 1)
    ways[0] = 1.0
    for r in doubled:
        ways[r:] = ways[r:] + ways[:-r]
    lo = int(round(2.0 * min(r_plus, r_minus)))
    hi = int(round(2.0 * max(r_plus, r_minus)))
    count = ways[:lo + 1].sum() + ways[hi:].sum()
    return min(1.0, float(count / 2.0 ** ranks.size))


def _normal_tail_p(ranks: np.ndarray, r_plus: float, r_minus: float) -> float:
    """Two-sided normal approximation with tie-corrected variance and a
    0.5 continuity correction on W = min(R+, R-).
    """
    n = ranks.size
    mean = n * (n + 1) / 4.0
    _, tie_counts = np.unique(ranks, return_counts=True)
    t = tie_counts.astype(np.float64)
    var = (n * (n + 1) * (2 * n + 1) - ((t ** 3 - t).sum()) / 2.0) / 24.0
    sd = math.sqrt(var)
    w = min(r_plus, r_minus)
    z = (w - mean + 0.5) / sd
    # two-sided: 2 * Phi(z) written via the complementary error function
    p = math.erfc(-z / math.sqrt(2.0))
    return min(1.0, p)


def wilcoxon_signed_rank(a, b, method: str = "auto") -> WilcoxonResult:
    """Two-sided Wilcoxon signed-rank test on paired values.

    Zero differences are dropped; tied absolute differences receive
    averaged ranks (preserving r_plus + r_minus = n'(n'+1)/2). The exact
    p-value enumerates all 2^n sign patterns and is used for
    n_effective <= 25; larger n uses the normal approximation. Pass
    method="exact" or "normal" to force one.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or a.size == 0:
        raise ValueError("need two equal-length non-empty vectors")
    if method not in ("auto", "exact", "normal"):
        raise ValueError(f"unknown method {method!r}")
    d = a - b
    d = d[d != 0.0]
    n = d.size
    if n == 0:
        return WilcoxonResult(0.0, 0.0, 0, 1.0, "exact")
    ranks = _average_ranks(np.abs(d))
    r_plus = float(ranks[d > 0].sum())
    r_minus = float(ranks[d < 0].sum())
    if method == "auto":
        method = "exact" if n <= 25 else "normal"
    if method == "exact":
        p = _exact_tail_p(ranks, r_plus, r_minus)
    else:
        p = _normal_tail_p(ranks, r_plus, r_minus)
    return WilcoxonResult(r_plus, r_minus, n, p, method)


def five_number_summary(values) -> FiveNumberSummary:
    """Min, quartiles, max with linear interpolation at (n-1)*{.25,.5,.75}."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("five_number_summary needs a non-empty input")
    lo, q1, med, q3, hi = np.percentile(v, [0, 25, 50, 75, 100])
    return FiveNumberSummary(float(lo), float(q1), float(med), float(q3), float(hi))


def mean_std(values) -> tuple[float, float]:
    """Arithmetic mean and sample standard deviation (divide by n - 1).

    The sample convention is what reproduces the reference spread of the
    bundled benchmark results (0.1483; the population convention gives
    0.1475). A single value has spread 0 by definition here.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("mean_std needs a non-empty input")
    if v.size == 1 or v.min() == v.max():
        # a lone or constant sequence has zero spread, exactly
        return float(v[0]), 0.0
    return float(v.mean()), float(v.std(ddof=1))
