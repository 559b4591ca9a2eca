"""Numerical verification of the identities behind the objectives.

Every check compares an implementation value against an independent oracle
(brute-force pair enumeration, sort-based selection, exact piecewise-linear
minimization) or an analytic constant, and reports the worst deviation.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .data import Dataset
from .metrics import closed_form_optimum, pairwise_surrogate_risk
from .objectives import (
    MaxVars,
    MinVars,
    ObjectiveConfig,
    neg_branch_N,
    pos_branch_P,
    softplus,
)
from .scorer import ScorerParams
from .solver import SolverConfig, train


@dataclass(frozen=True)
class VerificationReport:
    name: str
    trials: int
    max_deviation: float
    bound: float
    passed: bool

    def to_dict(self):
        return asdict(self)


def _report(name, trials, dev, bound) -> VerificationReport:
    return VerificationReport(name, trials, float(dev), float(bound),
                              bool(dev <= bound))


def _random_scores(rng, n_max=50):
    n_pos = int(rng.integers(1, n_max // 2 + 1))
    n_neg = int(rng.integers(1, n_max - n_pos + 1))
    return rng.uniform(0, 1, n_pos), rng.uniform(0, 1, n_neg)


def _admissible_frac(rng, n):
    # any fraction whose floor selects at least one instance
    return float(rng.uniform(1.0 / n, 1.0))


def check_reformulation_equivalence(trials: int = 500,
                                    seed: int = 0) -> VerificationReport:
    """Pairwise squared-margin risk equals 1 + instance-wise closed-form minimum."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        pos, neg = _random_scores(rng)
        beta = _admissible_frac(rng, len(neg))
        alpha = _admissible_frac(rng, len(pos))
        for kind, al in (("OPAUC", 1.0), ("TPAUC", alpha)):
            risk = pairwise_surrogate_risk(pos, neg, al, beta, kind)
            opt = closed_form_optimum(pos, neg, al, beta, kind)
            worst = max(worst, abs(risk - (1.0 + opt.min_value)))
    return _report("reformulation_equivalence", trials, worst, 1e-10)


def topk_threshold_min(losses: np.ndarray, k: int) -> float:
    """Exact minimum of s + mean_top_k hinge objective via breakpoints.

    phi(s) = s + (1/k) * sum_i [x_i - s]_+ is piecewise linear with
    breakpoints at the x_i, so the minimum sits on a breakpoint.
    """
    x = np.asarray(losses, dtype=np.float64)
    vals = [s + np.sum(np.maximum(x - s, 0.0)) / k for s in x]
    return float(min(vals))


def check_topk_threshold(trials: int = 500, seed: int = 0) -> VerificationReport:
    """Threshold-minimized hinge objective equals the sorted top-k average."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(1, 31))
        x = rng.uniform(-5, 5, n)
        k = int(rng.integers(1, n + 1))
        topk = float(np.mean(np.sort(x)[::-1][:k]))
        worst = max(worst, abs(topk_threshold_min(x, k) - topk))
    return _report("topk_threshold", trials, worst, 1e-9)


def _threshold_objective_min_hinge(losses, beta, lo=0.0, hi=5.0) -> float:
    """min over s' in [lo,hi] of beta*s' + mean([N_i - s']_+): exact."""
    pts = np.concatenate([[lo, hi], np.clip(losses, lo, hi)])
    vals = beta * pts + np.mean(np.maximum(losses[None, :] - pts[:, None], 0.0), axis=1)
    return float(vals.min())


def _threshold_objective_min_soft(losses, beta, kappa, lo=0.0, hi=5.0) -> float:
    """min over s' of the softplus-smoothed threshold objective.

    The objective is convex in s' with derivative beta - mean(sigmoid(
    kappa*(N_i - s'))), monotone increasing in s'; bisect it to machine
    precision, then clamp to the box.
    """
    from scipy.special import expit

    def deriv(s):
        return beta - float(np.mean(expit(kappa * (losses - s))))

    if deriv(lo) >= 0:
        s_star = lo
    elif deriv(hi) <= 0:
        s_star = hi
    else:
        a, b = lo, hi
        for _ in range(200):
            mid = 0.5 * (a + b)
            if deriv(mid) < 0:
                a = mid
            else:
                b = mid
        s_star = 0.5 * (a + b)
    return float(beta * s_star + np.mean(softplus(losses - s_star, kappa)))


def check_softplus_gap(kappas=(2, 4, 8, 16, 32), trials: int = 100,
                       seed: int = 0) -> VerificationReport:
    """Smoothed-vs-hinge inner-minimum gap is at most ln2/kappa, shrinking in kappa.

    The softplus exceeds the hinge pointwise by at most ln2/kappa (the
    excess peaks at the kink), so the minimized threshold objectives can
    differ by no more than that; larger kappa tightens the excess
    everywhere, so the measured gap must not grow along the kappa sweep.
    """
    kappas = list(kappas)
    if not kappas or any(k2 <= k1 for k1, k2 in zip(kappas, kappas[1:])):
        raise ValueError("kappas must be nonempty and increasing")
    rng = np.random.default_rng(seed)
    worst_excess = -np.inf  # max over draws/kappas of gap - bound (pass if <= 0)
    for _ in range(trials):
        n_neg = int(rng.integers(1, 40))
        f = rng.uniform(0, 1, n_neg)
        b = float(rng.uniform(0, 1))
        gamma = float(rng.uniform(b - 1.0, 1.0))
        beta = float(rng.uniform(0.05, 1.0))
        losses = neg_branch_N(f, b, gamma)
        hinge_min = _threshold_objective_min_hinge(losses, beta)
        prev_gap = np.inf
        for kappa in kappas:
            gap = abs(_threshold_objective_min_soft(losses, beta, kappa) - hinge_min)
            worst_excess = max(worst_excess, gap - math.log(2.0) / kappa)
            if gap > prev_gap + 1e-12:
                worst_excess = max(worst_excess, gap - prev_gap)
            prev_gap = gap
    return _report("softplus_gap", trials, worst_excess, 0.0)


def check_monotone_branches(trials: int = 1000, seed: int = 0) -> VerificationReport:
    """N nondecreasing (and P nonincreasing) in f on the admissible gamma range."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        f1, f2 = np.sort(rng.uniform(0, 1, 2))
        a = float(rng.uniform(0, 1))
        b = float(rng.uniform(0, 1))
        g_n = float(rng.uniform(b - 1.0, 1.0))
        worst = max(worst, neg_branch_N(f1, b, g_n) - neg_branch_N(f2, b, g_n))
        g_p = float(rng.uniform(max(-a, b - 1.0), 1.0))
        worst = max(worst, pos_branch_P(f2, a, g_p) - pos_branch_P(f1, a, g_p))
    return _report("monotone_branches", trials, worst, 0.0)


def check_hinge_weight_identity(trials: int = 1000, seed: int = 0) -> VerificationReport:
    """[x]_+ = max over c in [0,1] of c*x, attained at c = 1{x>0}."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        x = float(rng.uniform(-5, 5))
        c_star = 1.0 if x > 0 else 0.0
        worst = max(worst, abs(c_star * x - max(x, 0.0)))
    return _report("hinge_weight_identity", trials, worst, 0.0)


def quantile_deviation(ds: Dataset, tau: MinVars, gamma: float, beta: float) -> float:
    """Effective selected-negative fraction: share with N-loss strictly above s'."""
    from .scorer import score_batch

    f_neg = score_batch(tau.theta, ds.features[ds.neg_ids])
    losses = neg_branch_N(f_neg, tau.b, gamma)
    return float(np.mean(losses > tau.s_prime))


def run_bias_sweep(ds_train: Dataset, ds_val: Dataset | None,
                   scorer_init: ScorerParams, kappas,
                   obj_cfg_base: ObjectiveConfig, solver_cfg: SolverConfig):
    """Train the surrogate at each kappa plus one unbiased run; report beta-tilde.

    All runs share the scorer initialization and solver seed so the only
    moving part is the hinge treatment.
    """
    rows = []
    for kappa in kappas:
        cfg = ObjectiveConfig(**{**_cfg_dict(obj_cfg_base),
                                 "formulation": "surrogate", "kappa": kappa})
        tau, xv, trace = train(ds_train, ds_val, scorer_init, solver_cfg, cfg)
        rows.append(_sweep_row("surrogate", kappa, ds_train, tau, xv, cfg, trace))
    cfg = ObjectiveConfig(**{**_cfg_dict(obj_cfg_base), "formulation": "unbiased"})
    tau, xv, trace = train(ds_train, ds_val, scorer_init, solver_cfg, cfg)
    rows.append(_sweep_row("unbiased", float("nan"), ds_train, tau, xv, cfg, trace))
    return rows


def _cfg_dict(cfg: ObjectiveConfig) -> dict:
    return asdict(cfg)


def _sweep_row(kind, kappa, ds, tau, xv, cfg, trace):
    beta_eff = quantile_deviation(ds, tau, xv.gamma, cfg.beta)
    return {
        "kind": kind,
        "kappa": kappa,
        "val_pauc": trace.best_val_pauc,
        "beta_eff": beta_eff,
        "beta_dev": abs(beta_eff - cfg.beta),
    }


ALL_CHECKS = {
    "reformulation_equivalence": check_reformulation_equivalence,
    "topk_threshold": check_topk_threshold,
    "softplus_gap": check_softplus_gap,
    "monotone_branches": check_monotone_branches,
    "hinge_weight_identity": check_hinge_weight_identity,
}


def run_all_checks(seed: int = 0, only=None, trials=None):
    """Run the named checks (all by default); returns a list of reports."""
    reports = []
    for name, fn in ALL_CHECKS.items():
        if only is not None and name not in only:
            continue
        kwargs = {"seed": seed}
        if trials is not None:
            kwargs["trials"] = trials
        reports.append(fn(**kwargs))
    return reports


def reports_to_json(reports) -> str:
    return json.dumps([r.to_dict() for r in reports], indent=2)
