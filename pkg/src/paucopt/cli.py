"""Command-line interface: generate | train | evaluate | verify | bench | sweep.

Every command is deterministic given its config and seed. Exit codes:
0 success, 1 check or acceptance failure, 2 usage error. The env var
PAUC_SEED, when set, overrides any configured seed.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from .data import DataError, Dataset, SplitSpec, generate_synthetic, load_csv, save_csv, split, stratified_sample
from .metrics import MetricError, empirical_auc, empirical_opauc, empirical_tpauc, roc_curve
from .objectives import MinVars, ObjectiveConfig, ObjectiveError, evaluate as eval_objective, initial_max_vars
from .scorer import ScorerParams, init_scorer, score_batch, warmup_logistic
from .solver import SolverConfig, SolverError, train
from .verify import reports_to_json, run_all_checks, run_bias_sweep, ALL_CHECKS


def _seed_override(seed: int) -> int:
    env = os.environ.get("PAUC_SEED")
    return int(env) if env else seed


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_generate(args) -> int:
    seed = _seed_override(args.seed)
    ds = generate_synthetic(args.n, args.imbalance, args.dim, args.separation, seed)
    save_csv(ds, args.output, label_column=args.label_col)
    print(f"wrote {args.output}: n={ds.n} n_pos={ds.n_pos} n_neg={ds.n_neg}")
    return 0


def _load_run_config(args):
    with open(args.config, encoding="utf-8") as fh:
        doc = json.load(fh)
    seed = _seed_override(args.seed if args.seed is not None else doc.get("seed", 0))

    dsrc = doc.get("dataset", {})
    if "csv" in dsrc:
        ds = load_csv(dsrc["csv"], dsrc.get("label_col", "label"))
    else:
        syn = dsrc.get("synthetic", {})
        ds = generate_synthetic(syn.get("n", 2000), syn.get("imbalance", 0.1),
                                syn.get("dim", 5), syn.get("separation", 4.0),
                                syn.get("seed", seed))
    sp = doc.get("split", {})
    spec = SplitSpec(sp.get("train_frac", 0.7), sp.get("val_frac", 0.15),
                     sp.get("test_frac", 0.15), sp.get("seed", seed))
    ds_train, ds_val, ds_test = split(ds, spec)

    sc = doc.get("scorer", {})
    scorer = init_scorer(sc.get("kind", "linear"), ds.dim,
                         tuple(sc.get("hidden", (8,))), seed=seed)

    ob = doc.get("objective", {})
    obj_cfg = ObjectiveConfig(
        metric_kind=ob.get("metric", "OPAUC"),
        formulation=ob.get("formulation", "surrogate"),
        alpha=ob.get("alpha", 1.0),
        beta=ob.get("beta", 0.3),
        kappa=ob.get("kappa", 4.0),
        omega=ob.get("omega", 0.0),
        lagrange_cap=ob.get("lagrange_cap", 1e9),
        prior_p=ds_train.prior_p,
    )
    so = doc.get("solver", {})
    T = args.T if getattr(args, "T", None) is not None else so.get("T", 500)
    batch = so.get("batch", 256)
    solver_cfg = SolverConfig(
        nu=so.get("nu", 0.5), lam=so.get("lambda", 0.5),
        k_coef=so.get("k", 2.0), m_coef=so.get("m", 10.0),
        iota1=so.get("iota1", 1.0), iota2=so.get("iota2", 1.0),
        T=T,
        batch_pos=so.get("batch_pos", max(1, batch // 8)),
        batch_neg=so.get("batch_neg", batch - max(1, batch // 8)),
        seed=seed,
        warmup_epochs=so.get("warmup_epochs", 0),
        eval_every=so.get("eval_every", 50),
    )
    return ds_train, ds_val, ds_test, scorer, obj_cfg, solver_cfg


def _write_trace(trace, path: Path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "eta", "objective", "grad_map_proxy", "val_pauc",
                    "elapsed_ms"])
        w.writerows(trace.rows())


def cmd_train(args) -> int:
    ds_train, ds_val, _, scorer, obj_cfg, solver_cfg = _load_run_config(args)
    out = _out_dir(args)
    tau, xv, trace = train(ds_train, ds_val, scorer, solver_cfg, obj_cfg)
    _write_trace(trace, out / "trace.csv")

    checkpoint = {
        "scorer": json.loads(tau.theta.to_json()),
        "min_vars": {"a": tau.a, "b": tau.b, "s": tau.s, "s_prime": tau.s_prime,
                     "theta_a": tau.theta_a, "theta_b": tau.theta_b},
        "gamma": xv.gamma,
    }
    if trace.best_tau is not None:
        checkpoint["best_scorer"] = json.loads(trace.best_tau.theta.to_json())
    (out / "checkpoint.json").write_text(json.dumps(checkpoint, indent=2),
                                         encoding="utf-8")

    scores = score_batch(tau.theta, ds_val.features)
    pos, neg = scores[ds_val.pos_ids], scores[ds_val.neg_ids]
    if obj_cfg.metric_kind == "TPAUC":
        rep = empirical_tpauc(pos, neg, obj_cfg.alpha, obj_cfg.beta)
    else:
        rep = empirical_opauc(pos, neg, obj_cfg.beta)
    report = json.loads(rep.to_json())
    report["last_iterate_val_pauc"] = rep.value
    report["best_iterate_val_pauc"] = trace.best_val_pauc
    (out / "report.json").write_text(json.dumps(report, indent=2), encoding="utf-8")
    print(json.dumps(report))
    return 0


def cmd_evaluate(args) -> int:
    ds = load_csv(args.data, args.label_col)
    doc = json.loads(Path(args.checkpoint).read_text(encoding="utf-8"))
    scorer_doc = doc["scorer"] if "scorer" in doc else doc
    scorer = ScorerParams(scorer_doc["kind"], tuple(scorer_doc["layer_dims"]),
                          np.asarray(scorer_doc["weights"]))
    scores = score_batch(scorer, ds.features)
    pos, neg = scores[ds.pos_ids], scores[ds.neg_ids]

    for pair in args.at:
        alpha, beta = (float(v) for v in pair.split(","))
        if alpha >= 1.0 and beta >= 1.0:
            rep = empirical_auc(pos, neg)
        elif alpha >= 1.0:
            rep = empirical_opauc(pos, neg, beta)
        else:
            rep = empirical_tpauc(pos, neg, alpha, beta)
        print(rep.to_json())

    if args.out:
        out = _out_dir(args)
        rows = roc_curve(pos, neg)
        with open(out / "roc.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["fpr", "tpr"])
            w.writerows(rows)
        (out / "roc.svg").write_text(_roc_svg(rows), encoding="utf-8")
    return 0


def _roc_svg(rows, size: int = 400, margin: int = 20) -> str:
    """Minimal hand-rolled polyline rendering of an ROC curve."""
    span = size - 2 * margin
    pts = " ".join(
        f"{margin + fpr * span:.2f},{margin + (1.0 - tpr) * span:.2f}"
        for fpr, tpr in rows
    )
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}">\n'
        f'  <rect x="{margin}" y="{margin}" width="{span}" height="{span}" '
        f'fill="none" stroke="black"/>\n'
        f'  <line x1="{margin}" y1="{size - margin}" x2="{size - margin}" '
        f'y2="{margin}" stroke="gray" stroke-dasharray="4"/>\n'
        f'  <polyline points="{pts}" fill="none" stroke="crimson" '
        f'stroke-width="1.5"/>\n'
        f"</svg>\n"
    )


def cmd_verify(args) -> int:
    if args.trials is not None and args.trials < 1:
        print("error: --trials must be positive", file=sys.stderr)
        return 2
    only = set(args.only) if args.only else None
    if only and not only <= set(ALL_CHECKS):
        print(f"error: unknown check(s) {sorted(only - set(ALL_CHECKS))}",
              file=sys.stderr)
        return 2
    seed = _seed_override(args.seed)
    reports = run_all_checks(seed=seed, only=only, trials=args.trials)
    text = reports_to_json(reports)
    if args.out:
        (_out_dir(args) / "verify.json").write_text(text + "\n", encoding="utf-8")
    print(text)
    return 0 if all(r.passed for r in reports) else 1


def _time_steps(step_fn, reps: int) -> tuple[float, float]:
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        step_fn()
        times.append((time.perf_counter() - t0) * 1000.0)
    return float(np.median(times)), float(np.percentile(times, 90))


def _pairwise_reference_step(f_pos, f_neg) -> float:
    # deliberately pair-enumerating: the O(n_pos*n_neg) baseline being compared
    total = 0.0
    for fp in f_pos:
        for fn in f_neg:
            total += (1.0 - (fp - fn)) ** 2
    return total / (len(f_pos) * len(f_neg))


def bench_rows(batch_sizes=(64, 128, 256, 512), reps: int = 15, seed: int = 0,
               dim: int = 5):
    """Median/p90 per-step milliseconds for instance-wise vs pairwise losses."""
    n = 2 * max(batch_sizes) + 4
    ds = generate_synthetic(n, 0.5, dim, 2.0, seed)
    scorer = init_scorer("linear", dim, seed=seed)
    rows = []
    for bs in batch_sizes:
        half = bs // 2
        obj_cfg = ObjectiveConfig(metric_kind="OPAUC", formulation="surrogate",
                                  beta=0.3, prior_p=ds.prior_p)
        mv = MinVars(theta=scorer)
        xv = initial_max_vars(ds.n)
        rng = np.random.default_rng(seed)
        batch = stratified_sample(ds, half, half, rng)

        def inst_step():
            eval_objective(obj_cfg, mv, xv, batch, ds)

        med, p90 = _time_steps(inst_step, reps)
        rows.append((half, half, med, p90, "instance_wise"))

        f_pos = score_batch(scorer, ds.features[batch.pos_ids])
        f_neg = score_batch(scorer, ds.features[batch.neg_ids])
        f_pos_l, f_neg_l = list(f_pos), list(f_neg)

        def pair_step():
            _pairwise_reference_step(f_pos_l, f_neg_l)

        med, p90 = _time_steps(pair_step, reps)
        rows.append((half, half, med, p90, "pairwise"))
    return rows


def cmd_bench(args) -> int:
    seed = _seed_override(args.seed)
    rows = bench_rows(tuple(args.batch_sizes), args.reps, seed)
    out = _out_dir(args)
    with open(out / "timings.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["batch_pos", "batch_neg", "median_ms", "p90_ms", "kind"])
        w.writerows(rows)
    for row in rows:
        print(",".join(str(v) for v in row))
    return 0


def cmd_sweep(args) -> int:
    seed = _seed_override(args.seed)
    ds = generate_synthetic(args.n, args.imbalance, args.dim, args.separation, seed)
    ds_train, ds_val, _ = split(ds, SplitSpec(seed=seed))
    # warm the scorer once, then freeze it: the sweep isolates how each
    # hinge treatment places the selection threshold on a fixed loss
    # distribution, which a still-moving scorer would pull from under it
    scorer = warmup_logistic(init_scorer("linear", ds.dim, seed=seed),
                             ds_train, 2, 0.3, seed=seed)
    obj_cfg = ObjectiveConfig(metric_kind="OPAUC", formulation="surrogate",
                              beta=args.beta, omega=args.omega,
                              prior_p=ds_train.prior_p)
    solver_cfg = SolverConfig(nu=0.05, lam=1.0, k_coef=1.0, m_coef=27.0,
                              T=args.T, seed=seed,
                              batch_pos=min(32, ds_train.n_pos),
                              batch_neg=min(224, ds_train.n_neg),
                              freeze_theta=True, eval_every=max(1, args.T))
    rows = run_bias_sweep(ds_train, ds_val, scorer, args.kappas, obj_cfg, solver_cfg)
    out = _out_dir(args)
    (out / "sweep.json").write_text(json.dumps(rows, indent=2), encoding="utf-8")
    for row in rows:
        print(json.dumps(row))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="paucopt",
                                description="Partial-AUC minimax optimization")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic imbalanced CSV")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--imbalance", type=float, required=True)
    g.add_argument("--dim", type=int, default=5)
    g.add_argument("--separation", type=float, default=2.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--label-col", default="label")
    g.add_argument("--output", default="synthetic.csv")
    g.set_defaults(fn=cmd_generate)

    t = sub.add_parser("train", help="run the descent-ascent optimizer")
    t.add_argument("--config", required=True)
    t.add_argument("--T", type=int, default=None)
    t.add_argument("--seed", type=int, default=None)
    t.add_argument("--out", default="out")
    t.set_defaults(fn=cmd_train)

    e = sub.add_parser("evaluate", help="score a CSV with a checkpoint")
    e.add_argument("--data", required=True)
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--label-col", default="label")
    e.add_argument("--at", nargs="+", default=["1,1"],
                   metavar="ALPHA,BETA", help="metric points, e.g. 1,0.3 0.5,0.5")
    e.add_argument("--out", default=None)
    e.set_defaults(fn=cmd_evaluate)

    v = sub.add_parser("verify", help="run the numerical verification suite")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--trials", type=int, default=None)
    v.add_argument("--only", nargs="+", default=None, choices=sorted(ALL_CHECKS))
    v.add_argument("--out", default=None)
    v.set_defaults(fn=cmd_verify)

    b = sub.add_parser("bench", help="per-step timing across batch sizes")
    b.add_argument("--batch-sizes", nargs="+", type=int,
                   default=[64, 128, 256, 512])
    b.add_argument("--reps", type=int, default=15)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", default="out")
    b.set_defaults(fn=cmd_bench)

    s = sub.add_parser("sweep", help="softplus-sharpness sensitivity sweep")
    s.add_argument("--kappas", nargs="+", type=float, default=[2.0, 32.0])
    s.add_argument("--n", type=int, default=2000)
    s.add_argument("--imbalance", type=float, default=0.3)
    s.add_argument("--dim", type=int, default=5)
    s.add_argument("--separation", type=float, default=1.0)
    s.add_argument("--beta", type=float, default=0.3)
    s.add_argument("--omega", type=float, default=0.1)
    s.add_argument("--T", type=int, default=3000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", default="out")
    s.set_defaults(fn=cmd_sweep)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (DataError, MetricError, ObjectiveError, SolverError,
            FileNotFoundError, KeyError, json.JSONDecodeError,
            ValueError) as exc:
        # bad configs, unreadable inputs: usage errors, same class as bad flags
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
