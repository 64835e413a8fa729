"""Correlation and pairwise discrimination statistics for metric evaluation."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import ComputationError, InputError

Z95 = 1.96


class UndefinedStatistic(ComputationError):
    pass


@dataclass(frozen=True)
class ScoredItems:
    mos: Sequence[float]
    metric: Sequence[float]
    ci95: Optional[Sequence[float]] = None

    def __post_init__(self):
        n = len(self.mos)
        if n < 2 or len(self.metric) != n:
            raise InputError("mos and metric must have the same length >= 2")
        if self.ci95 is not None:
            if len(self.ci95) != n:
                raise InputError("ci95 must be aligned with mos")
            if np.any(np.asarray(self.ci95, dtype=float) < 0):
                raise InputError("ci95 half-widths must be non-negative")


def _pair(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or x.shape != y.shape:
        raise InputError("inputs must be 1-D sequences of equal length")
    if x.size < 2:
        raise InputError("need at least two values")
    return x, y


def plcc(x, y) -> float:
    """Pearson linear correlation, no prior nonlinear mapping."""
    x, y = _pair(x, y)
    xm = x - x.mean()
    ym = y - y.mean()
    sxx = np.dot(xm, xm)
    syy = np.dot(ym, ym)
    if sxx == 0 or syy == 0:
        raise UndefinedStatistic("correlation undefined: zero variance input")
    r = np.dot(xm, ym) / np.sqrt(sxx * syy)
    return float(min(1.0, max(-1.0, r)))


def ranks(x) -> np.ndarray:
    """Ascending 1-based ranks; ties share the mean of their positions."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size < 1:
        raise InputError("ranks needs a non-empty 1-D sequence")
    return rankdata(x, method="average")


def srocc(x, y) -> float:
    """Spearman rank-order correlation (Pearson on average ranks)."""
    x, y = _pair(x, y)
    return plcc(ranks(x), ranks(y))


def significant_pairs(mos, ci95) -> list[tuple[int, int]]:
    """Pairs whose MOS differ at the 95% level, oriented better-first.

    Standard errors are recovered from the half-widths as ci95 / 1.96 and
    a two-sample z statistic is compared with 1.96.
    """
    mos = np.asarray(mos, dtype=np.float64)
    ci = np.asarray(ci95, dtype=np.float64)
    if mos.shape != ci.shape or mos.ndim != 1:
        raise InputError("mos and ci95 must be aligned 1-D sequences")
    if np.any(ci < 0):
        raise InputError("ci95 half-widths must be non-negative")
    i, j = np.triu_indices(mos.size, k=1)
    se2 = (ci / Z95) ** 2
    gap = mos[i] - mos[j]
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.abs(gap) / np.sqrt(se2[i] + se2[j])
    keep = z > Z95
    better = np.where(gap > 0, i, j)[keep]
    worse = np.where(gap > 0, j, i)[keep]
    return list(zip(better.tolist(), worse.tolist()))


def auc_from_scores(positive, negative) -> float:
    """Mann-Whitney AUC; ties between classes count one half."""
    positive = np.asarray(positive, dtype=np.float64)
    negative = np.asarray(negative, dtype=np.float64)
    n_pos, n_neg = positive.size, negative.size
    if n_pos == 0 or n_neg == 0:
        raise UndefinedStatistic("AUC needs both classes")
    r = rankdata(np.concatenate([positive, negative]), method="average")
    u = r[:n_pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def auc_bw(items: ScoredItems, pairs=None) -> float:
    """Better-vs-worse AUC over significantly different pairs.

    Each pair (better i, worse j) contributes metric_i - metric_j as a positive
    example and its negation as a negative one. 0.5 is chance, 1.0 is a metric
    that orders every significant pair correctly.
    """
    if items.ci95 is None:
        raise InputError("AUC_BW requires ci95")
    if pairs is None:
        pairs = significant_pairs(items.mos, items.ci95)
    if not pairs:
        raise UndefinedStatistic("AUC_BW undefined: no significantly different pairs")
    metric = np.asarray(items.metric, dtype=np.float64)
    better, worse = np.asarray(pairs).T
    d = metric[better] - metric[worse]
    return auc_from_scores(d, -d)
