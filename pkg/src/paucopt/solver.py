"""Accelerated stochastic gradient descent-ascent with momentum variance reduction.

Each iteration moves the descent block tau and the ascent block (gamma, c)
by a convex combination with a projected gradient step, samples a fresh
stratified minibatch, and refreshes the gradient momenta v (for tau) and w
(for gamma/c) with STORM-style corrections evaluated at both the new and
old variables on the same batch.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .data import Dataset, Minibatch, stratified_sample
from .metrics import empirical_opauc, empirical_tpauc
from .objectives import (
    MaxVars,
    MinVars,
    ObjectiveConfig,
    evaluate,
    initial_max_vars,
    project_max,
    project_min_flat,
)
from .scorer import ScorerParams, score_batch, warmup_logistic


class SolverError(ValueError):
    """Raised for invalid solver configuration."""


@dataclass(frozen=True)
class SolverConfig:
    nu: float = 0.5            # min-side step
    lam: float = 0.5           # max-side step
    k_coef: float = 2.0
    m_coef: float = 10.0
    iota1: float = 1.0
    iota2: float = 1.0
    T: int = 500
    batch_pos: int = 32
    batch_neg: int = 224
    seed: int = 0
    warmup_epochs: int = 0
    eval_every: int = 50
    freeze_theta: bool = False  # keep scorer weights fixed (convex-toy mode)

    def __post_init__(self):
        if self.nu < 0 or self.lam < 0:
            raise SolverError("step sizes must be nonnegative")
        if self.k_coef <= 0 or self.m_coef < 2:
            raise SolverError("require k > 0 and m >= 2")
        if self.k_coef / self.m_coef ** (1.0 / 3.0) > 1.0 + 1e-12:
            raise SolverError("eta_0 = k/m^(1/3) must not exceed 1 (need m >= k^3)")
        if self.iota1 <= 0 or self.iota2 <= 0:
            raise SolverError("correction coefficients must be positive")
        if self.T < 0 or self.batch_pos < 1 or self.batch_neg < 1:
            raise SolverError("bad iteration count or batch sizes")


@dataclass
class SolverState:
    tau: MinVars
    gamma_block: MaxVars
    v: np.ndarray              # momentum for grad wrt tau (flat layout)
    w_gamma: float             # momentum for grad wrt gamma
    w_c: dict                  # id -> momentum for grad wrt c_id
    active_c: tuple            # ids sampled in the latest batch; only they move
    t: int
    rng: np.random.Generator


@dataclass(frozen=True)
class TraceRecord:
    t: int
    eta: float
    objective: float
    grad_map_proxy: float
    val_pauc: float            # nan when no validation set given
    elapsed_ms: float


@dataclass
class TrainTrace:
    records: list = field(default_factory=list)
    box_violations: int = 0    # feasibility breaches observed after any step
    best_val_pauc: float = float("nan")
    best_tau: MinVars | None = None

    def rows(self):
        return [(r.t, r.eta, r.objective, r.grad_map_proxy, r.val_pauc,
                 r.elapsed_ms) for r in self.records]


def eta_schedule(cfg: SolverConfig, t: int) -> float:
    return cfg.k_coef / (cfg.m_coef + t) ** (1.0 / 3.0)


def init_state(ds: Dataset, scorer_init: ScorerParams,
               cfg: SolverConfig) -> SolverState:
    tau = MinVars(theta=scorer_init, a=1.0, b=0.0, s=0.0, s_prime=1.0,
                  theta_a=0.0, theta_b=0.0)
    return SolverState(
        tau=tau,
        gamma_block=initial_max_vars(ds.n),
        v=np.zeros(scorer_init.n_params + tau.n_scalars),
        w_gamma=0.0,
        w_c={},
        active_c=(),
        t=0,
        rng=np.random.default_rng(cfg.seed),
    )


def _zero_theta(g: np.ndarray, n_theta: int) -> np.ndarray:
    out = g.copy()
    out[:n_theta] = 0.0
    return out


def asgda_step(state: SolverState, cfg: SolverConfig,
               obj_cfg: ObjectiveConfig, ds: Dataset) -> SolverState:
    """One full iteration; returns a new state, leaving the input untouched."""
    eta = eta_schedule(cfg, state.t)
    n_theta = state.tau.theta.n_params
    tau_old = state.tau
    max_old = state.gamma_block

    # descent block: convex combination with the projected gradient point
    v = _zero_theta(state.v, n_theta) if cfg.freeze_theta else state.v
    flat_old = tau_old.flat()
    cand = project_min_flat(flat_old - cfg.nu * v, n_theta, obj_cfg)
    tau_new = tau_old.with_flat((1.0 - eta) * flat_old + eta * cand)

    # ascent block: gamma always moves; c coordinates move only when they
    # were sampled in the batch behind the current momenta. Their partial
    # gradients carry the 1/B batch-mean factor, so the step is rescaled by
    # the batch size to recover the per-instance magnitude.
    g_cand = min(max(max_old.gamma + cfg.lam * state.w_gamma, -1.0), 1.0)
    gamma_new = (1.0 - eta) * max_old.gamma + eta * g_cand
    c_new = max_old.c.copy()
    lam_c = cfg.lam * (cfg.batch_pos + cfg.batch_neg)
    for idx in state.active_c:
        ci = c_new[idx]
        cand = min(max(ci + lam_c * state.w_c[idx], 0.0), 1.0)
        c_new[idx] = (1.0 - eta) * ci + eta * cand
    max_new = MaxVars(gamma_new, c_new)

    # fresh batch; both momentum refresh gradients use this same batch
    batch = stratified_sample(ds, min(cfg.batch_pos, ds.n_pos),
                              min(cfg.batch_neg, ds.n_neg), state.rng)
    lg_new = evaluate(obj_cfg, tau_new, max_new, batch, ds)
    lg_old = evaluate(obj_cfg, tau_old, max_old, batch, ds)

    rho = cfg.iota1 * eta ** 2
    xi = cfg.iota2 * eta ** 2
    v_next = lg_new.grad_min + (1.0 - rho) * (state.v - lg_old.grad_min)
    if cfg.freeze_theta:
        v_next = _zero_theta(v_next, n_theta)
    w_gamma_next = (lg_new.grad_max_gamma
                    + (1.0 - xi) * (state.w_gamma - lg_old.grad_max_gamma))
    w_c_next = dict(state.w_c)
    for idx, g_new in lg_new.grad_max_c.items():
        g_old = lg_old.grad_max_c[idx]
        w_c_next[idx] = g_new + (1.0 - xi) * (w_c_next.get(idx, 0.0) - g_old)

    return SolverState(tau=tau_new, gamma_block=max_new, v=v_next,
                       w_gamma=w_gamma_next, w_c=w_c_next,
                       active_c=tuple(lg_new.grad_max_c),
                       t=state.t + 1, rng=state.rng)


def full_batch(ds: Dataset) -> Minibatch:
    return Minibatch(ds.pos_ids, ds.neg_ids)


def grad_mapping_proxy(state: SolverState, cfg: SolverConfig,
                       obj_cfg: ObjectiveConfig, ds: Dataset) -> float:
    """Projected-stationarity proxy (1/nu)*||tau - P(tau - nu*g)||_2.

    g is the full-data descent gradient at the current variables; the exact
    metric would maximize over the ascent block first.
    """
    if cfg.nu == 0:
        return 0.0
    n_theta = state.tau.theta.n_params
    lg = evaluate(obj_cfg, state.tau, state.gamma_block, full_batch(ds), ds)
    g = _zero_theta(lg.grad_min, n_theta) if cfg.freeze_theta else lg.grad_min
    flat = state.tau.flat()
    moved = project_min_flat(flat - cfg.nu * g, n_theta, obj_cfg)
    return float(np.linalg.norm(flat - moved) / cfg.nu)


def _box_violation(tau: MinVars, xv: MaxVars, cfg: ObjectiveConfig) -> float:
    """Largest distance of any variable from its box; 0 when feasible."""
    from .objectives import S_BOX, S_PRIME_BOX
    dev = 0.0
    for val, lo, hi in ((tau.a, 0.0, 1.0), (tau.b, 0.0, 1.0),
                        (tau.s, *S_BOX), (tau.s_prime, *S_PRIME_BOX),
                        (tau.theta_a, 0.0, cfg.lagrange_cap),
                        (tau.theta_b, 0.0, cfg.lagrange_cap),
                        (xv.gamma, -1.0, 1.0)):
        dev = max(dev, lo - val, val - hi)
    if len(xv.c):
        dev = max(dev, float(-xv.c.min()), float(xv.c.max() - 1.0))
    return max(dev, 0.0)


def _val_pauc(tau: MinVars, ds_val: Dataset, obj_cfg: ObjectiveConfig) -> float:
    scores = score_batch(tau.theta, ds_val.features)
    pos = scores[ds_val.pos_ids]
    neg = scores[ds_val.neg_ids]
    if obj_cfg.metric_kind == "TPAUC":
        return empirical_tpauc(pos, neg, obj_cfg.alpha, obj_cfg.beta).value
    return empirical_opauc(pos, neg, obj_cfg.beta).value


def train(ds_train: Dataset, ds_val: Dataset | None,
          scorer_init: ScorerParams, cfg: SolverConfig,
          obj_cfg: ObjectiveConfig):
    """Optional cross-entropy warm-up followed by T descent-ascent steps.

    Returns (MinVars, MaxVars, TrainTrace). The trace records objective and
    stationarity-proxy values every cfg.eval_every iterations and at the
    final step, and tracks the best validation partial AUC seen.
    """
    scorer = warmup_logistic(scorer_init, ds_train, cfg.warmup_epochs,
                             cfg.nu, seed=cfg.seed)
    state = init_state(ds_train, scorer, cfg)
    trace = TrainTrace()
    t0 = time.perf_counter()

    def record(st: SolverState):
        eta = eta_schedule(cfg, max(st.t - 1, 0))
        lg = evaluate(obj_cfg, st.tau, st.gamma_block, full_batch(ds_train), ds_train)
        proxy = grad_mapping_proxy(st, cfg, obj_cfg, ds_train)
        val = _val_pauc(st.tau, ds_val, obj_cfg) if ds_val is not None else float("nan")
        elapsed = (time.perf_counter() - t0) * 1000.0
        trace.records.append(TraceRecord(st.t, eta, lg.value, proxy, val, elapsed))
        if ds_val is not None and not (val <= trace.best_val_pauc):
            trace.best_val_pauc = val
            trace.best_tau = st.tau

    if cfg.T == 0:
        record(state)
        return state.tau, state.gamma_block, trace

    for _ in range(cfg.T):
        state = asgda_step(state, cfg, obj_cfg, ds_train)
        if _box_violation(state.tau, state.gamma_block, obj_cfg) > 0.0:
            trace.box_violations += 1
        if state.t % cfg.eval_every == 0 or state.t == cfg.T:
            record(state)
    return state.tau, state.gamma_block, trace
