"""Instance-wise minimax objectives for partial-AUC optimization.

Two formulations over the descent block tau = (theta, a, b, s, s', theta_a,
theta_b) and the ascent block (gamma, c):

* surrogate: the quantile-selection hinge is smoothed by a softplus of
  sharpness kappa, leaving only (tau, gamma) — asymptotically unbiased with
  gap at most ln2/kappa;
* unbiased: the hinge is realized exactly through per-instance selection
  weights c in [0,1] via [x]_+ = max_c c*x.

Both carry the strong-concavity regularizer -omega*gamma^2 (the unbiased
form additionally subtracts omega * mean(c_i^2)) and the Lagrangian terms
-theta_b*(b-1-gamma) - theta_a*(-a-gamma) that decouple the gamma-domain
coupling into plain boxes.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import expit

from .data import Dataset, Minibatch
from .scorer import ScorerParams, score_batch, weighted_score_grad

S_BOX = (-4.0, 1.0)
S_PRIME_BOX = (0.0, 5.0)


class ObjectiveError(ValueError):
    """Raised for invalid objective configuration or evaluation inputs."""


@dataclass(frozen=True)
class ObjectiveConfig:
    metric_kind: str = "OPAUC"        # "OPAUC" | "TPAUC"
    formulation: str = "surrogate"    # "surrogate" | "unbiased"
    alpha: float = 1.0
    beta: float = 0.3
    kappa: float = 4.0
    omega: float = 0.0
    lagrange_cap: float = 1e9
    prior_p: float = 0.5

    def __post_init__(self):
        if self.metric_kind not in ("OPAUC", "TPAUC"):
            raise ObjectiveError(f"unknown metric kind {self.metric_kind!r}")
        if self.formulation not in ("surrogate", "unbiased"):
            raise ObjectiveError(f"unknown formulation {self.formulation!r}")
        if not 0.0 < self.alpha <= 1.0 or not 0.0 < self.beta <= 1.0:
            raise ObjectiveError("alpha and beta must lie in (0,1]")
        if self.formulation == "surrogate" and self.kappa <= 0:
            raise ObjectiveError("surrogate formulation requires kappa > 0")
        if self.omega < 0:
            raise ObjectiveError("omega must be nonnegative")
        if not 0.0 < self.prior_p < 1.0:
            raise ObjectiveError("prior_p must lie in (0,1)")


@dataclass(frozen=True)
class MinVars:
    """Descent block. For OPAUC, s is unused and theta_a stays pinned at 0."""

    theta: ScorerParams
    a: float = 1.0
    b: float = 0.0
    s: float = 0.0
    s_prime: float = 1.0
    theta_a: float = 0.0
    theta_b: float = 0.0

    @property
    def n_scalars(self) -> int:
        return 6

    def flat(self) -> np.ndarray:
        """Layout: theta | a | b | s | s' | theta_a | theta_b."""
        return np.concatenate([
            self.theta.weights,
            [self.a, self.b, self.s, self.s_prime, self.theta_a, self.theta_b],
        ])

    def with_flat(self, vec: np.ndarray) -> "MinVars":
        n = self.theta.n_params
        if len(vec) != n + self.n_scalars:
            raise ObjectiveError("flat vector length does not match layout")
        a, b, s, sp, ta, tb = vec[n:]
        return MinVars(self.theta.with_weights(vec[:n].copy()),
                       float(a), float(b), float(s), float(sp), float(ta), float(tb))


@dataclass(frozen=True)
class MaxVars:
    """Ascent block: the coupling scalar gamma plus per-instance weights c."""

    gamma: float = 0.0
    c: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        object.__setattr__(self, "c", np.asarray(self.c, dtype=np.float64))


def initial_max_vars(n: int) -> MaxVars:
    return MaxVars(gamma=0.0, c=np.ones(n))


@dataclass(frozen=True)
class LossGrad:
    value: float
    grad_min: np.ndarray      # over the MinVars flat layout
    grad_max_gamma: float
    grad_max_c: dict          # id -> partial, batch members only


def softplus(x, kappa: float):
    """log(1 + exp(kappa*x)) / kappa, safe against overflow."""
    x = np.asarray(x, dtype=np.float64)
    # logaddexp(0, k*x) = log(1+e^{kx}) without overflow; for kx > 30 it
    # reduces to kx + log1p(e^{-kx}) internally, i.e. ~x after division
    out = np.logaddexp(0.0, kappa * x) / kappa
    return out if out.ndim else float(out)


def pos_branch_P(f_x, a: float, gamma: float):
    """Per-positive squared-center loss (f-a)^2 - 2(1+gamma)f."""
    return (f_x - a) ** 2 - 2.0 * (1.0 + gamma) * f_x


def neg_branch_N(f_x, b: float, gamma: float):
    """Per-negative squared-center loss (f-b)^2 + 2(1+gamma)f."""
    return (f_x - b) ** 2 + 2.0 * (1.0 + gamma) * f_x


def project_min(mv: MinVars, cfg: ObjectiveConfig) -> MinVars:
    """Coordinatewise clamp onto the descent boxes; theta is unconstrained."""
    cap = cfg.lagrange_cap
    return replace(
        mv,
        a=min(max(mv.a, 0.0), 1.0),
        b=min(max(mv.b, 0.0), 1.0),
        s=min(max(mv.s, S_BOX[0]), S_BOX[1]),
        s_prime=min(max(mv.s_prime, S_PRIME_BOX[0]), S_PRIME_BOX[1]),
        theta_a=0.0 if cfg.metric_kind == "OPAUC" else min(max(mv.theta_a, 0.0), cap),
        theta_b=min(max(mv.theta_b, 0.0), cap),
    )


def project_min_flat(vec: np.ndarray, n_theta: int, cfg: ObjectiveConfig) -> np.ndarray:
    """project_min on the flat layout, in place on a copy."""
    out = vec.copy()
    lo = np.array([0.0, 0.0, S_BOX[0], S_PRIME_BOX[0], 0.0, 0.0])
    hi = np.array([1.0, 1.0, S_BOX[1], S_PRIME_BOX[1],
                   cfg.lagrange_cap, cfg.lagrange_cap])
    out[n_theta:] = np.clip(out[n_theta:], lo, hi)
    if cfg.metric_kind == "OPAUC":
        out[n_theta + 4] = 0.0
    return out


def project_max(xv: MaxVars, cfg: ObjectiveConfig) -> MaxVars:
    return MaxVars(min(max(xv.gamma, -1.0), 1.0), np.clip(xv.c, 0.0, 1.0))


def _check_batch(batch: Minibatch):
    # single-class batches are legal (the other branch contributes zero
    # terms); only a fully empty batch is meaningless
    if batch.size == 0:
        raise ObjectiveError("empty batch")


def _assemble(mv: MinVars, ga, gb, gs, gsp, theta_weights_pos, theta_weights_neg,
              x_pos, x_neg, cfg: ObjectiveConfig, gamma: float):
    """Finish an evaluation: Lagrangian terms, theta backprop, flat gradient."""
    lag = -mv.theta_b * (mv.b - 1.0 - gamma) - mv.theta_a * (-mv.a - gamma)
    gb += -mv.theta_b
    ga += mv.theta_a
    g_gamma_lag = mv.theta_a + mv.theta_b
    g_theta_a = mv.a + gamma
    g_theta_b = 1.0 + gamma - mv.b
    if cfg.metric_kind == "OPAUC":
        gs = 0.0
        g_theta_a = 0.0
    x = np.vstack([x_pos, x_neg])
    w = np.concatenate([theta_weights_pos, theta_weights_neg])
    _, g_theta = weighted_score_grad(mv.theta, x, w)
    grad_min = np.concatenate([g_theta, [ga, gb, gs, gsp, g_theta_a, g_theta_b]])
    return lag, g_gamma_lag, g_theta_a, grad_min


def eval_surrogate(cfg: ObjectiveConfig, mv: MinVars, xv: MaxVars,
                   batch: Minibatch, ds: Dataset) -> LossGrad:
    """Softplus-smoothed objective value and exact analytic partials.

    The value is the batch mean of the per-instance objective plus the
    Lagrangian terms (added once). grad_max_c is empty: c plays no role.
    """
    if cfg.formulation != "surrogate":
        raise ObjectiveError("eval_surrogate requires formulation='surrogate'")
    _check_batch(batch)
    p, q = cfg.prior_p, 1.0 - cfg.prior_p
    alpha, beta, kappa, omega = cfg.alpha, cfg.beta, cfg.kappa, cfg.omega
    gamma = xv.gamma
    B = batch.size
    x_pos = ds.features[batch.pos_ids]
    x_neg = ds.features[batch.neg_ids]
    f_pos = score_batch(mv.theta, x_pos)
    f_neg = score_batch(mv.theta, x_neg)

    P = pos_branch_P(f_pos, mv.a, gamma)
    N = neg_branch_N(f_neg, mv.b, gamma)
    dP_df = 2.0 * (f_pos - mv.a) - 2.0 * (1.0 + gamma)
    dN_df = 2.0 * (f_neg - mv.b) + 2.0 * (1.0 + gamma)

    if cfg.metric_kind == "TPAUC":
        sig_p = expit(kappa * (P - mv.s))
        pos_terms = (alpha * mv.s + softplus(P - mv.s, kappa)) / (alpha * p)
        wp = sig_p / (alpha * p) / B                 # d value / d P_i
        gs = float(np.sum(alpha - sig_p) / (alpha * p)) / B
    else:
        pos_terms = P / p
        wp = np.full_like(P, 1.0 / p / B)
        gs = 0.0

    sig_n = expit(kappa * (N - mv.s_prime))
    neg_terms = (beta * mv.s_prime + softplus(N - mv.s_prime, kappa)) / (beta * q)
    wn = sig_n / (beta * q) / B                      # d value / d N_i
    gsp = float(np.sum(beta - sig_n) / (beta * q)) / B

    data_value = (np.sum(pos_terms) + np.sum(neg_terms)) / B
    gamma_term = -(1.0 + omega) * gamma ** 2

    ga = float(np.sum(wp * (-2.0 * (f_pos - mv.a))))
    gb = float(np.sum(wn * (-2.0 * (f_neg - mv.b))))
    g_gamma = float(np.sum(wp * (-2.0 * f_pos)) + np.sum(wn * (2.0 * f_neg))
                    - 2.0 * (1.0 + omega) * gamma)

    lag, g_gamma_lag, _, grad_min = _assemble(
        mv, ga, gb, gs, gsp, wp * dP_df, wn * dN_df, x_pos, x_neg, cfg, gamma)
    return LossGrad(float(data_value + gamma_term + lag), grad_min,
                    g_gamma + g_gamma_lag, {})


def eval_unbiased(cfg: ObjectiveConfig, mv: MinVars, xv: MaxVars,
                  batch: Minibatch, ds: Dataset) -> LossGrad:
    """Exactly unbiased objective using per-instance selection weights c.

    Negative hinges become c_i*(N_i - s'); for TPAUC the positive hinges
    become c_i*(P_i - s). The concavity regularizer subtracts
    omega*(gamma^2 + mean over the batch of the participating c_i^2).
    """
    if cfg.formulation != "unbiased":
        raise ObjectiveError("eval_unbiased requires formulation='unbiased'")
    _check_batch(batch)
    if len(xv.c) < ds.n:
        raise ObjectiveError("c must carry one entry per dataset instance")
    p, q = cfg.prior_p, 1.0 - cfg.prior_p
    alpha, beta, omega = cfg.alpha, cfg.beta, cfg.omega
    gamma = xv.gamma
    B = batch.size
    x_pos = ds.features[batch.pos_ids]
    x_neg = ds.features[batch.neg_ids]
    f_pos = score_batch(mv.theta, x_pos)
    f_neg = score_batch(mv.theta, x_neg)
    c_neg = xv.c[batch.neg_ids]

    P = pos_branch_P(f_pos, mv.a, gamma)
    N = neg_branch_N(f_neg, mv.b, gamma)
    dP_df = 2.0 * (f_pos - mv.a) - 2.0 * (1.0 + gamma)
    dN_df = 2.0 * (f_neg - mv.b) + 2.0 * (1.0 + gamma)

    grad_c = {}
    if cfg.metric_kind == "TPAUC":
        c_pos = xv.c[batch.pos_ids]
        pos_terms = (alpha * mv.s + c_pos * (P - mv.s)) / (alpha * p)
        wp = c_pos / (alpha * p) / B
        gs = float(np.sum(alpha - c_pos) / (alpha * p)) / B
        c_reg = (np.sum(c_pos ** 2) + np.sum(c_neg ** 2)) / B
        for i, idx in enumerate(batch.pos_ids):
            grad_c[int(idx)] = float((P[i] - mv.s) / (alpha * p) / B
                                     - 2.0 * omega * c_pos[i] / B)
    else:
        pos_terms = P / p
        wp = np.full_like(P, 1.0 / p / B)
        gs = 0.0
        c_reg = np.sum(c_neg ** 2) / B

    neg_terms = (beta * mv.s_prime + c_neg * (N - mv.s_prime)) / (beta * q)
    wn = c_neg / (beta * q) / B
    gsp = float(np.sum(beta - c_neg) / (beta * q)) / B
    for j, idx in enumerate(batch.neg_ids):
        grad_c[int(idx)] = float((N[j] - mv.s_prime) / (beta * q) / B
                                 - 2.0 * omega * c_neg[j] / B)

    data_value = (np.sum(pos_terms) + np.sum(neg_terms)) / B
    gamma_term = -(1.0 + omega) * gamma ** 2 - omega * c_reg

    ga = float(np.sum(wp * (-2.0 * (f_pos - mv.a))))
    gb = float(np.sum(wn * (-2.0 * (f_neg - mv.b))))
    g_gamma = float(np.sum(wp * (-2.0 * f_pos)) + np.sum(wn * (2.0 * f_neg))
                    - 2.0 * (1.0 + omega) * gamma)

    lag, g_gamma_lag, _, grad_min = _assemble(
        mv, ga, gb, gs, gsp, wp * dP_df, wn * dN_df, x_pos, x_neg, cfg, gamma)
    return LossGrad(float(data_value + gamma_term + lag), grad_min,
                    g_gamma + g_gamma_lag, grad_c)


def evaluate(cfg: ObjectiveConfig, mv: MinVars, xv: MaxVars,
             batch: Minibatch, ds: Dataset) -> LossGrad:
    """Dispatch on cfg.formulation."""
    if cfg.formulation == "surrogate":
        return eval_surrogate(cfg, mv, xv, batch, ds)
    return eval_unbiased(cfg, mv, xv, batch, ds)
