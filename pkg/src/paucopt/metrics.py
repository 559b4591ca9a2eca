"""Exact empirical ranking metrics and brute-force oracles.

Covers full AUC, one-way partial AUC (small false-positive rates), two-way
partial AUC (joint TPR/FPR constraints), empirical score quantiles, the
pairwise squared-surrogate risk over the constrained pair set, and its
closed-form instance-wise optimum.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np


class MetricError(ValueError):
    """Raised when a metric precondition fails (empty class, zero floor)."""


@dataclass(frozen=True)
class PaucReport:
    metric_kind: str  # "AUC" | "OPAUC" | "TPAUC"
    alpha: float
    beta: float
    value: float
    n_pos_used: int
    n_neg_used: int

    def to_json(self) -> str:
        return json.dumps(asdict(self))


@dataclass(frozen=True)
class ClosedFormOptimum:
    a_star: float
    b_star: float
    gamma_star: float
    min_value: float


def _as_scores(scores) -> np.ndarray:
    out = np.asarray(scores, dtype=np.float64).ravel()
    if out.size == 0:
        raise MetricError("empty class")
    return out


def _floor(x: float) -> int:
    # tolerate IEEE round-off in products like 10*0.7 = 6.999...
    return int(np.floor(x + 1e-9))


def _neg_floor(n_neg: int, beta: float) -> int:
    k = _floor(n_neg * beta)
    if k < 1:
        raise MetricError(f"floor(n_neg*beta) = 0 for n_neg={n_neg}, beta={beta}")
    return k


def _pos_floor(n_pos: int, alpha: float) -> int:
    k = _floor(n_pos * alpha)
    if k < 1:
        raise MetricError(f"floor(n_pos*alpha) = 0 for n_pos={n_pos}, alpha={alpha}")
    return k


def top_negatives(scores_neg, beta: float) -> np.ndarray:
    """The floor(n_neg*beta) largest negative scores, by sorted rank."""
    neg = _as_scores(scores_neg)
    k = _neg_floor(len(neg), beta)
    return np.sort(neg)[::-1][:k]


def bottom_positives(scores_pos, alpha: float) -> np.ndarray:
    """The floor(n_pos*alpha) smallest positive scores, by sorted rank."""
    pos = _as_scores(scores_pos)
    k = _pos_floor(len(pos), alpha)
    return np.sort(pos)[:k]


def neg_quantile_threshold(scores_neg, beta: float) -> float:
    """Empirical upper score quantile: the k-th largest negative score."""
    return float(top_negatives(scores_neg, beta)[-1])


def pos_quantile_threshold(scores_pos, alpha: float) -> float:
    """Empirical lower score quantile: the k-th smallest positive score."""
    return float(bottom_positives(scores_pos, alpha)[-1])


def _pair_value(pos: np.ndarray, neg: np.ndarray) -> float:
    # 0-1 loss is 1{f_pos < f_neg}: strict inequality, ties rank correctly
    bad = (pos[:, None] < neg[None, :]).mean()
    return float(1.0 - bad)


def empirical_auc(scores_pos, scores_neg) -> PaucReport:
    """Full AUC with strict-inequality 0-1 loss."""
    pos, neg = _as_scores(scores_pos), _as_scores(scores_neg)
    return PaucReport("AUC", 1.0, 1.0, _pair_value(pos, neg), len(pos), len(neg))


def empirical_opauc(scores_pos, scores_neg, beta: float) -> PaucReport:
    """Partial AUC over all positives x the top-beta fraction of negatives."""
    pos, neg = _as_scores(scores_pos), _as_scores(scores_neg)
    sel_neg = top_negatives(neg, beta)
    return PaucReport("OPAUC", 1.0, beta, _pair_value(pos, sel_neg),
                      len(pos), len(sel_neg))


def empirical_tpauc(scores_pos, scores_neg, alpha: float, beta: float) -> PaucReport:
    """Partial AUC over bottom-alpha positives x top-beta negatives."""
    pos, neg = _as_scores(scores_pos), _as_scores(scores_neg)
    sel_pos = bottom_positives(pos, alpha)
    sel_neg = top_negatives(neg, beta)
    return PaucReport("TPAUC", alpha, beta, _pair_value(sel_pos, sel_neg),
                      len(sel_pos), len(sel_neg))


def _selected(scores_pos, scores_neg, alpha, beta, metric_kind):
    pos, neg = _as_scores(scores_pos), _as_scores(scores_neg)
    sel_neg = top_negatives(neg, beta)
    if metric_kind == "TPAUC":
        sel_pos = bottom_positives(pos, alpha)
    elif metric_kind == "OPAUC":
        sel_pos = pos
    else:
        raise MetricError(f"unknown metric kind {metric_kind!r}")
    return sel_pos, sel_neg


def pairwise_surrogate_risk(scores_pos, scores_neg, alpha: float, beta: float,
                            metric_kind: str = "OPAUC") -> float:
    """Mean squared-margin loss (1 - (f_pos - f_neg))^2 over the constrained pairs."""
    sel_pos, sel_neg = _selected(scores_pos, scores_neg, alpha, beta, metric_kind)
    diff = 1.0 - (sel_pos[:, None] - sel_neg[None, :])
    return float(np.mean(diff ** 2))


def closed_form_optimum(scores_pos, scores_neg, alpha: float, beta: float,
                        metric_kind: str = "OPAUC") -> ClosedFormOptimum:
    """Closed-form minimum of the instance-wise reformulation.

    The optimal centers are the selected-class score means; the saddle value
    satisfies pairwise_surrogate_risk = 1 + min_value.
    """
    sel_pos, sel_neg = _selected(scores_pos, scores_neg, alpha, beta, metric_kind)
    a_star = float(sel_pos.mean())
    b_star = float(sel_neg.mean())
    delta = b_star - a_star
    e_a = float(np.mean((sel_pos - a_star) ** 2))
    e_b = float(np.mean((sel_neg - b_star) ** 2))
    return ClosedFormOptimum(a_star, b_star, delta,
                             e_a + e_b + delta ** 2 + 2.0 * delta)


def roc_curve(scores_pos, scores_neg):
    """ROC sweep: one (FPR, TPR) row per score threshold plus the (0,0) endpoint.

    Rows are produced in threshold-descending order, giving exactly
    n_pos + n_neg + 1 rows; a point at a tied threshold counts every
    instance with score >= threshold as predicted positive.
    """
    pos, neg = _as_scores(scores_pos), _as_scores(scores_neg)
    allscores = np.concatenate([pos, neg])
    order = np.argsort(-allscores, kind="stable")
    rows = [(0.0, 0.0)]
    for t in allscores[order]:
        tpr = float((pos >= t).mean())
        fpr = float((neg >= t).mean())
        rows.append((fpr, tpr))
    return rows
