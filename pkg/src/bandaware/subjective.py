"""Subjective score recovery and cross-experiment reliability.

Opinion model: u[e, s] = psi[e] + delta[s] + v[s] * X, X ~ N(0, 1), with
per-item quality psi, per-subject bias delta (summing to zero) and per-subject
inconsistency v. The maximum-likelihood estimate is found by exact
coordinate updates, which never decrease the likelihood.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
import numpy as np

from . import stats
from .errors import InputError

log = logging.getLogger(__name__)

VARIANCE_FLOOR = 1e-4
SCALE = (0.0, 100.0)


@dataclass(frozen=True)
class ScoreMatrix:
    """Items x subjects opinion scores; NaN marks a missing rating."""

    scores: np.ndarray
    item_ids: tuple = None
    subject_ids: tuple = None

    def __post_init__(self):
        u = np.array(self.scores, dtype=np.float64)
        if u.ndim != 2:
            raise InputError("score matrix must be 2-D (items x subjects)")
        n_items, n_subjects = u.shape
        if n_items < 2 or n_subjects < 2:
            raise InputError("need at least 2 items and 2 subjects")
        obs = ~np.isnan(u)
        if np.any(np.isinf(u)):
            raise InputError("scores must be finite")
        vals = u[obs]
        if vals.size and (vals.min() < SCALE[0] or vals.max() > SCALE[1]):
            raise InputError("scores must lie in [0, 100]")
        item_ids = tuple(self.item_ids) if self.item_ids is not None else tuple(
            f"item{i}" for i in range(n_items))
        subject_ids = tuple(self.subject_ids) if self.subject_ids is not None else tuple(
            f"subject{s}" for s in range(n_subjects))
        if len(item_ids) != n_items or len(subject_ids) != n_subjects:
            raise InputError("id lists do not match the matrix shape")
        per_item = obs.sum(axis=1)
        per_subject = obs.sum(axis=0)
        if np.any(per_item < 1):
            bad = item_ids[int(np.argmin(per_item))]
            raise InputError(f"item {bad!r} has no scores")
        if np.any(per_subject < 2):
            bad = subject_ids[int(np.argmin(per_subject))]
            raise InputError(f"subject {bad!r} has fewer than 2 scores")
        u.flags.writeable = False
        object.__setattr__(self, "scores", u)
        object.__setattr__(self, "item_ids", item_ids)
        object.__setattr__(self, "subject_ids", subject_ids)

    @property
    def observed(self) -> np.ndarray:
        return ~np.isnan(self.scores)


@dataclass(frozen=True)
class MosTable:
    item_ids: tuple
    mos: np.ndarray
    ci95: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "item_ids", tuple(self.item_ids))
        object.__setattr__(self, "mos", np.asarray(self.mos, dtype=np.float64))
        object.__setattr__(self, "ci95", np.asarray(self.ci95, dtype=np.float64))
        if not len(self.item_ids) == self.mos.size == self.ci95.size:
            raise InputError("item_ids, mos and ci95 must be aligned")


@dataclass(frozen=True)
class MosEstimate:
    item_ids: tuple
    subject_ids: tuple
    psi: np.ndarray
    ci95: np.ndarray
    delta: np.ndarray
    v: np.ndarray
    iterations: int
    converged: bool
    loglik: tuple = field(default=(), repr=False)

    def table(self) -> MosTable:
        return MosTable(self.item_ids, self.psi, self.ci95)


@dataclass(frozen=True)
class RankFlipReport:
    flipped_significant_pairs: list
    plcc: float
    srocc: float

    def to_dict(self) -> dict:
        return {
            "flipped_significant_pairs": [list(p) for p in self.flipped_significant_pairs],
            "n_flipped": len(self.flipped_significant_pairs),
            "plcc": round(self.plcc, 6),
            "srocc": round(self.srocc, 6),
        }


def log_likelihood(matrix: ScoreMatrix, psi, delta, v) -> float:
    """Gaussian log-likelihood of the observed scores."""
    obs = matrix.observed
    u = np.where(obs, matrix.scores, 0.0)
    v2 = np.asarray(v, dtype=np.float64) ** 2
    r = u - np.asarray(psi)[:, None] - np.asarray(delta)[None, :]
    terms = -0.5 * np.log(2 * np.pi * v2)[None, :] - r ** 2 / (2 * v2)[None, :]
    return float(np.sum(terms[obs]))


def solve_mle(matrix: ScoreMatrix, tol: float = 1e-9, max_iter: int = 10000) -> MosEstimate:
    """Alternate closed-form updates of psi, delta and v until they settle.

    Convergence means no parameter moved by more than ``tol`` over a full
    sweep. On hitting ``max_iter`` the partial estimate is returned with
    ``converged=False``.
    """
    obs = matrix.observed
    u = np.where(obs, matrix.scores, 0.0)
    n_per_item = obs.sum(axis=1)
    n_per_subject = obs.sum(axis=0)

    psi = u.sum(axis=1) / n_per_item
    delta = np.zeros(u.shape[1])
    v2 = np.ones(u.shape[1])
    trace = [log_likelihood(matrix, psi, delta, np.sqrt(v2))]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        prev = psi, delta, np.sqrt(v2)

        w = obs / v2[None, :]
        psi = (w * (u - delta[None, :])).sum(axis=1) / w.sum(axis=1)

        delta = (obs * (u - psi[:, None])).sum(axis=0) / n_per_subject
        shift = delta.mean()
        delta = delta - shift
        psi = psi + shift

        resid = obs * (u - psi[:, None] - delta[None, :])
        v2 = np.maximum((resid ** 2).sum(axis=0) / n_per_subject, VARIANCE_FLOOR)

        trace.append(log_likelihood(matrix, psi, delta, np.sqrt(v2)))
        change = max(
            np.max(np.abs(psi - prev[0])),
            np.max(np.abs(delta - prev[1])),
            np.max(np.abs(np.sqrt(v2) - prev[2])),
        )
        if change < tol:
            converged = True
            break
    if not converged:
        log.warning("MLE did not converge in %d iterations", max_iter)

    ci95 = stats.Z95 / np.sqrt((obs / v2[None, :]).sum(axis=1))
    return MosEstimate(
        item_ids=matrix.item_ids,
        subject_ids=matrix.subject_ids,
        psi=psi,
        ci95=ci95,
        delta=delta,
        v=np.sqrt(v2),
        iterations=it,
        converged=converged,
        loglik=tuple(trace),
    )


def plain_mos(matrix: ScoreMatrix) -> MosTable:
    """Per-item mean and normal-approximation 95% half-width.

    Items with fewer than two ratings get a NaN half-width.
    """
    obs = matrix.observed
    n = obs.sum(axis=1)
    u = np.where(obs, matrix.scores, 0.0)
    mean = u.sum(axis=1) / n
    ss = (obs * (u - mean[:, None]) ** 2).sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        sd = np.sqrt(ss / (n - 1))
        ci = np.where(n >= 2, stats.Z95 * sd / np.sqrt(n), np.nan)
    undefined = [matrix.item_ids[i] for i in np.flatnonzero(n < 2)]
    if undefined:
        log.warning("ci95 undefined for items with a single score: %s", ", ".join(map(str, undefined)))
    return MosTable(matrix.item_ids, mean, ci)


def _align(a: MosTable, b: MosTable) -> MosTable:
    if len(a.item_ids) != len(b.item_ids) or set(a.item_ids) != set(b.item_ids):
        raise InputError("experiments cover different items")
    if len(set(a.item_ids)) != len(a.item_ids):
        raise InputError("duplicate item ids")
    pos = {k: i for i, k in enumerate(b.item_ids)}
    order = [pos[k] for k in a.item_ids]
    return MosTable(a.item_ids, b.mos[order], b.ci95[order])


def reliability_compare(a: MosTable, b: MosTable) -> RankFlipReport:
    """Pairs ordered oppositely by two experiments while significant in both."""
    if len(a.item_ids) < 2:
        raise InputError("need at least two items")
    b = _align(a, b)
    sig_a = set(stats.significant_pairs(a.mos, a.ci95))
    sig_b = set(stats.significant_pairs(b.mos, b.ci95))
    flipped = sorted((i, j) for i, j in sig_a if (j, i) in sig_b)
    return RankFlipReport(
        flipped_significant_pairs=[(a.item_ids[i], a.item_ids[j]) for i, j in flipped],
        plcc=stats.plcc(a.mos, b.mos),
        srocc=stats.srocc(a.mos, b.mos),
    )


# ---- CSV surfaces ---------------------------------------------------------

def _float_cell(cell: str, where: str) -> float:
    cell = cell.strip()
    if cell == "":
        return math.nan
    try:
        return float(cell)
    except ValueError:
        raise InputError(f"non-numeric value {cell!r} at {where}") from None


def read_scores_csv(path) -> ScoreMatrix:
    """Raw opinion CSV: header = item column then subject ids; empty cell = missing."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if len(rows) < 2:
        raise InputError(f"{path}: no score rows")
    subjects = [s.strip() for s in rows[0][1:]]
    items, data = [], []
    for ln, row in enumerate(rows[1:], start=2):
        if len(row) != len(subjects) + 1:
            raise InputError(f"{path}:{ln}: expected {len(subjects) + 1} cells, got {len(row)}")
        items.append(row[0].strip())
        data.append([_float_cell(c, f"{path}:{ln}") for c in row[1:]])
    if len(set(items)) != len(items):
        raise InputError(f"{path}: duplicate item ids")
    return ScoreMatrix(np.array(data), items, subjects)


def read_mos_csv(path) -> MosTable:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"item_id", "mos", "ci95"} - set(reader.fieldnames or ())
        if missing:
            raise InputError(f"{path}: missing column(s) {', '.join(sorted(missing))}")
        ids, mos, ci = [], [], []
        for ln, row in enumerate(reader, start=2):
            ids.append(row["item_id"])
            mos.append(_float_cell(row["mos"], f"{path}:{ln}"))
            ci.append(_float_cell(row["ci95"], f"{path}:{ln}"))
    return MosTable(ids, mos, ci)


def _fmt(x: float) -> str:
    return "" if math.isnan(x) else f"{x:.6f}"


def format_mos_csv(table: MosTable) -> str:
    lines = ["item_id,mos,ci95"]
    lines += [f"{i},{_fmt(m)},{_fmt(c)}" for i, m, c in zip(table.item_ids, table.mos, table.ci95)]
    return "\n".join(lines) + "\n"


def format_subjects_csv(est: MosEstimate) -> str:
    lines = ["subject_id,bias,inconsistency"]
    lines += [f"{s},{_fmt(d)},{_fmt(v)}" for s, d, v in zip(est.subject_ids, est.delta, est.v)]
    return "\n".join(lines) + "\n"
