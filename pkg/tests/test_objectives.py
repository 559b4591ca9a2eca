import math

import numpy as np
import pytest

from paucopt.data import Dataset, Minibatch, generate_synthetic, stratified_sample
from paucopt.objectives import (
    MaxVars,
    MinVars,
    ObjectiveConfig,
    ObjectiveError,
    eval_surrogate,
    eval_unbiased,
    evaluate,
    neg_branch_N,
    pos_branch_P,
    project_max,
    project_min,
    softplus,
)
from paucopt.scorer import ScorerParams, init_scorer


def const_scorer_ds(*scores_and_labels):
    """1-feature dataset + zero-weight linear scorer so every f = 0.5."""
    labels = np.array([y for _, y in scores_and_labels])
    feats = np.zeros((len(labels), 1))
    return ScorerParams("linear", (1, 1), np.zeros(2)), Dataset(feats, labels)


class TestSoftplus:
    def test_at_zero(self):
        assert softplus(0.0, 2.0) == pytest.approx(math.log(2) / 2)

    def test_large_argument_no_overflow(self):
        assert softplus(10.0, 4.0) == pytest.approx(10.0, abs=1e-12)
        assert softplus(1000.0, 32.0) == 1000.0

    def test_very_negative(self):
        assert softplus(-1000.0, 32.0) == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("kappa", [0.5, 2.0, 8.0, 32.0])
    def test_hinge_gap_bound_on_grid(self, kappa):
        x = np.linspace(-5, 5, 2001)
        gap = softplus(x, kappa) - np.maximum(x, 0.0)
        assert gap.min() >= 0.0
        assert gap.max() <= math.log(2) / kappa + 1e-12
        # supremum attained at the kink
        assert softplus(0.0, kappa) == pytest.approx(math.log(2) / kappa)


class TestBranches:
    def test_hand_values(self):
        assert pos_branch_P(0.5, 0.5, 0.0) == pytest.approx(-1.0)
        assert neg_branch_N(0.5, 0.5, 0.0) == pytest.approx(1.0)

    def test_neg_branch_monotone_on_admissible_gamma(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            b = rng.uniform(0, 1)
            g = rng.uniform(b - 1, 1)
            f1, f2 = np.sort(rng.uniform(0, 1, 2))
            assert neg_branch_N(f1, b, g) <= neg_branch_N(f2, b, g) + 1e-12

    def test_pos_branch_decreasing_on_admissible_gamma(self):
        rng = np.random.default_rng(1)
        for _ in range(1000):
            a, b = rng.uniform(0, 1, 2)
            g = rng.uniform(max(-a, b - 1), 1)
            f1, f2 = np.sort(rng.uniform(0, 1, 2))
            assert pos_branch_P(f2, a, g) <= pos_branch_P(f1, a, g) + 1e-12


class TestConfig:
    def test_bad_formulation(self):
        with pytest.raises(ObjectiveError):
            ObjectiveConfig(formulation="exact")

    def test_surrogate_requires_positive_kappa(self):
        with pytest.raises(ObjectiveError):
            ObjectiveConfig(formulation="surrogate", kappa=0.0)

    def test_unbiased_allows_zero_kappa(self):
        ObjectiveConfig(formulation="unbiased", kappa=0.0)


class TestProjection:
    def test_clamps(self):
        cfg = ObjectiveConfig(metric_kind="TPAUC", alpha=0.5)
        mv = MinVars(init_scorer("linear", 2, seed=0), a=1.3, b=-0.2, s=-9.0,
                     s_prime=7.0, theta_a=-1.0, theta_b=2e9)
        out = project_min(mv, cfg)
        assert (out.a, out.b, out.s, out.s_prime) == (1.0, 0.0, -4.0, 5.0)
        assert out.theta_a == 0.0
        assert out.theta_b == 1e9

    def test_idempotent_on_feasible(self):
        cfg = ObjectiveConfig()
        mv = MinVars(init_scorer("linear", 2, seed=0), a=0.4, b=0.2, s=-1.0,
                     s_prime=2.0, theta_a=0.0, theta_b=3.0)
        out = project_min(mv, cfg)
        assert out == mv

    def test_gamma_clamp(self):
        cfg = ObjectiveConfig()
        out = project_max(MaxVars(-2.0, np.array([1.5, -0.5, 0.3])), cfg)
        assert out.gamma == -1.0
        np.testing.assert_array_equal(out.c, [1.0, 0.0, 0.3])

    def test_opauc_pins_theta_a(self):
        cfg = ObjectiveConfig(metric_kind="OPAUC")
        mv = MinVars(init_scorer("linear", 2, seed=0), theta_a=0.7)
        assert project_min(mv, cfg).theta_a == 0.0


class TestSurrogateValues:
    def test_single_negative_hand_value(self):
        theta, ds = const_scorer_ds((0.5, 1), (0.5, 0))
        cfg = ObjectiveConfig("OPAUC", "surrogate", 1.0, 0.5, 2.0, 0.0, 1e9, 0.5)
        mv = MinVars(theta, a=1.0, b=0.5, s_prime=1.0)
        lg = eval_surrogate(cfg, mv, MaxVars(0.0, np.ones(2)),
                            Minibatch(np.array([], int), np.array([1])), ds)
        assert lg.value == pytest.approx((0.5 + math.log(2) / 2) / 0.25)

    def test_positive_a_gradient(self):
        theta, ds = const_scorer_ds((0.5, 1), (0.5, 0))
        cfg = ObjectiveConfig("OPAUC", "surrogate", 1.0, 0.5, 2.0, 0.0, 1e9, 0.5)
        mv = MinVars(theta, a=0.65)
        lg = eval_surrogate(cfg, mv, MaxVars(0.0, np.ones(2)),
                            Minibatch(np.array([0]), np.array([], int)), ds)
        assert lg.grad_min[theta.n_params] == pytest.approx(0.6)

    def test_omega_adds_gamma_penalty(self):
        theta, ds = const_scorer_ds((0.5, 1), (0.5, 0))
        batch = Minibatch(np.array([0]), np.array([1]))
        xv = MaxVars(0.3, np.ones(2))
        mv = MinVars(theta)
        base = ObjectiveConfig("OPAUC", "surrogate", 1.0, 0.5, 2.0, 0.0, 1e9, 0.5)
        reg = ObjectiveConfig("OPAUC", "surrogate", 1.0, 0.5, 2.0, 1.5, 1e9, 0.5)
        g0 = eval_surrogate(base, mv, xv, batch, ds).grad_max_gamma
        g1 = eval_surrogate(reg, mv, xv, batch, ds).grad_max_gamma
        assert g1 - g0 == pytest.approx(-2 * 1.5 * 0.3)

    def test_grad_max_c_empty(self):
        theta, ds = const_scorer_ds((0.5, 1), (0.5, 0))
        cfg = ObjectiveConfig("OPAUC", "surrogate", prior_p=0.5)
        lg = eval_surrogate(cfg, MinVars(theta), MaxVars(0.0, np.ones(2)),
                            Minibatch(np.array([0]), np.array([1])), ds)
        assert lg.grad_max_c == {}

    def test_batch_mean_linearity(self):
        ds = generate_synthetic(30, 0.4, 3, 1.0, seed=0)
        theta = init_scorer("mlp", 3, (3,), seed=0)
        cfg = ObjectiveConfig("TPAUC", "surrogate", 0.5, 0.5, 3.0, 0.2,
                              prior_p=ds.prior_p)
        mv = MinVars(theta, a=0.6, b=0.3, s=-0.5, s_prime=0.8, theta_a=0.4,
                     theta_b=0.7)
        xv = MaxVars(0.2, np.ones(ds.n))
        full = Minibatch(ds.pos_ids, ds.neg_ids)
        whole = eval_surrogate(cfg, mv, xv, full, ds)
        # strip constants shared by every evaluation (Lagrangian + gamma term)
        const = (-(1 + cfg.omega) * xv.gamma ** 2
                 - mv.theta_b * (mv.b - 1 - xv.gamma)
                 - mv.theta_a * (-mv.a - xv.gamma))
        per_instance = []
        for i in ds.pos_ids:
            b1 = Minibatch(np.array([i]), np.array([], int))
            per_instance.append(eval_surrogate(cfg, mv, xv, b1, ds).value - const)
        for j in ds.neg_ids:
            b1 = Minibatch(np.array([], int), np.array([j]))
            per_instance.append(eval_surrogate(cfg, mv, xv, b1, ds).value - const)
        assert whole.value == pytest.approx(np.mean(per_instance) + const,
                                            abs=1e-12)


class TestUnbiasedValues:
    def test_single_negative_hand_value(self):
        theta, ds = const_scorer_ds((0.5, 1), (0.5, 0))
        cfg = ObjectiveConfig("OPAUC", "unbiased", 1.0, 0.5, 2.0, 0.0, 1e9, 0.5)
        mv = MinVars(theta, b=0.5, s_prime=0.5)
        lg = eval_unbiased(cfg, mv, MaxVars(0.0, np.ones(2)),
                           Minibatch(np.array([], int), np.array([1])), ds)
        assert lg.value == pytest.approx(3.0)

    def test_c_grad_at_zero_multiplicand(self):
        # N - s' = 0: value has no data dependence on c, only the regularizer
        theta, ds = const_scorer_ds((0.5, 1), (0.5, 0))
        cfg = ObjectiveConfig("OPAUC", "unbiased", 1.0, 0.5, 2.0, 0.8, 1e9, 0.5)
        mv = MinVars(theta, b=0.5, s_prime=1.0)  # N = 1.0 exactly
        c = np.full(2, 0.6)
        lg = eval_unbiased(cfg, mv, MaxVars(0.0, c),
                           Minibatch(np.array([], int), np.array([1])), ds)
        assert lg.grad_max_c[1] == pytest.approx(-2 * 0.8 * 0.6 / 1)

    def test_c_maximization_recovers_hinge(self):
        # coordinatewise optimum c* = 1{N - s' > 0} matches the exact-hinge value
        rng = np.random.default_rng(2)
        for _ in range(50):
            n = 12
            labels = np.array([1] * 4 + [0] * 8)
            ds = Dataset(rng.normal(size=(n, 2)), labels)
            theta = init_scorer("linear", 2, seed=int(rng.integers(1e6)))
            cfg = ObjectiveConfig("OPAUC", "unbiased", 1.0, 0.5, 2.0, 0.0,
                                  prior_p=ds.prior_p)
            mv = MinVars(theta, a=rng.uniform(0, 1), b=rng.uniform(0, 1),
                         s_prime=rng.uniform(0, 2))
            gamma = rng.uniform(-1, 1)
            from paucopt.scorer import score_batch
            f_neg = score_batch(theta, ds.features[ds.neg_ids])
            N = neg_branch_N(f_neg, mv.b, gamma)
            c = np.zeros(n)
            c[ds.neg_ids] = (N - mv.s_prime > 0).astype(float)
            lg = eval_unbiased(cfg, mv, MaxVars(gamma, c),
                               Minibatch(ds.pos_ids, ds.neg_ids), ds)
            # hinge counterpart computed directly
            from paucopt.objectives import pos_branch_P
            f_pos = score_batch(theta, ds.features[ds.pos_ids])
            P = pos_branch_P(f_pos, mv.a, gamma)
            q = 1 - cfg.prior_p
            hinge = (np.sum(P / cfg.prior_p)
                     + np.sum((cfg.beta * mv.s_prime
                               + np.maximum(N - mv.s_prime, 0.0))
                              / (cfg.beta * q))) / n - gamma ** 2
            assert lg.value == pytest.approx(hinge, abs=1e-12)

    def test_missing_c_rejected(self):
        theta, ds = const_scorer_ds((0.5, 1), (0.5, 0))
        cfg = ObjectiveConfig("OPAUC", "unbiased", prior_p=0.5)
        with pytest.raises(ObjectiveError, match="c must"):
            eval_unbiased(cfg, MinVars(theta), MaxVars(0.0, np.ones(1)),
                          Minibatch(np.array([0]), np.array([1])), ds)


class TestDegeneration:
    def test_tpauc_alpha_one_matches_opauc(self):
        # unbiased form with s at the top-k threshold (the minimum positive
        # loss when alpha=1) and c_pos its exact-hinge maximizer
        rng = np.random.default_rng(5)
        for _ in range(50):
            ds = generate_synthetic(24, 0.4, 2, 1.0, seed=int(rng.integers(1e6)))
            theta = init_scorer("linear", 2, seed=int(rng.integers(1e6)))
            gamma = rng.uniform(-1, 1)
            a, b = rng.uniform(0, 1, 2)
            sp = rng.uniform(0, 2)
            from paucopt.scorer import score_batch
            f_pos = score_batch(theta, ds.features[ds.pos_ids])
            P = pos_branch_P(f_pos, a, gamma)
            s = float(P.min())
            c = rng.uniform(0, 1, ds.n)
            c[ds.pos_ids] = (P - s > 0).astype(float)
            batch = Minibatch(ds.pos_ids, ds.neg_ids)
            kw = dict(alpha=1.0, beta=0.5, kappa=2.0, omega=0.0,
                      lagrange_cap=1e9, prior_p=ds.prior_p)
            tp = ObjectiveConfig("TPAUC", "unbiased", **kw)
            op = ObjectiveConfig("OPAUC", "unbiased", **kw)
            mv_tp = MinVars(theta, a=a, b=b, s=s, s_prime=sp)
            mv_op = MinVars(theta, a=a, b=b, s_prime=sp)
            v_tp = eval_unbiased(tp, mv_tp, MaxVars(gamma, c), batch, ds).value
            v_op = eval_unbiased(op, mv_op, MaxVars(gamma, c), batch, ds).value
            assert v_tp == pytest.approx(v_op, abs=1e-12)


class TestGradientFidelity:
    @pytest.mark.parametrize("metric", ["OPAUC", "TPAUC"])
    @pytest.mark.parametrize("formulation", ["surrogate", "unbiased"])
    def test_against_central_differences(self, metric, formulation):
        worst = 0.0
        for seed in range(25):
            rng = np.random.default_rng(seed)
            d = int(rng.integers(1, 6))
            ds = generate_synthetic(40, 0.4, d, 1.0, seed=seed)
            kind = "mlp" if rng.random() < 0.5 else "linear"
            theta = init_scorer(kind, d, (3,), seed=seed)
            cfg = ObjectiveConfig(metric, formulation,
                                  float(rng.uniform(0.2, 1.0)),
                                  float(rng.uniform(0.2, 1.0)),
                                  float(rng.uniform(1, 8)),
                                  float(rng.uniform(0, 2)), 1e9, ds.prior_p)
            mv = MinVars(theta, a=float(rng.uniform(0, 1)),
                         b=float(rng.uniform(0, 1)),
                         s=float(rng.uniform(-4, 1)),
                         s_prime=float(rng.uniform(0, 5)),
                         theta_a=0.0 if metric == "OPAUC"
                         else float(rng.uniform(0, 2)),
                         theta_b=float(rng.uniform(0, 2)))
            xv = MaxVars(float(rng.uniform(-1, 1)), rng.uniform(0, 1, ds.n))
            batch = stratified_sample(ds, 6, 10, rng)
            lg = evaluate(cfg, mv, xv, batch, ds)
            h = 1e-6
            flat = mv.flat()
            frozen = ({len(flat) - 4, len(flat) - 2} if metric == "OPAUC"
                      else set())
            for i in range(len(flat)):
                if i in frozen:
                    continue
                fp, fm = flat.copy(), flat.copy()
                fp[i] += h
                fm[i] -= h
                num = (evaluate(cfg, mv.with_flat(fp), xv, batch, ds).value
                       - evaluate(cfg, mv.with_flat(fm), xv, batch, ds).value
                       ) / (2 * h)
                worst = max(worst, abs(num - lg.grad_min[i])
                            / max(abs(num), abs(lg.grad_min[i]), 1e-3))
            num = (evaluate(cfg, mv, MaxVars(xv.gamma + h, xv.c), batch, ds).value
                   - evaluate(cfg, mv, MaxVars(xv.gamma - h, xv.c), batch,
                              ds).value) / (2 * h)
            worst = max(worst, abs(num - lg.grad_max_gamma) / max(abs(num), 1e-3))
            for idx, g in lg.grad_max_c.items():
                cp, cm = xv.c.copy(), xv.c.copy()
                cp[idx] += h
                cm[idx] -= h
                num = (evaluate(cfg, mv, MaxVars(xv.gamma, cp), batch, ds).value
                       - evaluate(cfg, mv, MaxVars(xv.gamma, cm), batch,
                                  ds).value) / (2 * h)
                worst = max(worst, abs(num - g) / max(abs(num), abs(g), 1e-3))
        assert worst <= 1e-5
