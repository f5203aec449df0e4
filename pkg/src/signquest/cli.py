"""Command-line front end.

Exit codes: 0 on success, 1 on runtime failure, 2 on usage errors (from
argument parsing), 3 on invalid configuration.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import bench, contopt, models, signsearch
from .bench import ConfigError
from .core import sign
from .oracles import (DirectionalDerivativeOracle, ModelOracle,
                      NoiselessHammingOracle)


def _env_seed() -> int:
    raw = os.environ.get("SIGNQUEST_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"SIGNQUEST_SEED must be an integer, got {raw!r}")


def _resolve_seed(args) -> int:
    return args.seed if args.seed is not None else _env_seed()


def _write_trace_csv(path: str, trace) -> None:
    with open(path, "w") as fh:
        fh.write("query_index,hamming_to_truth,directional_derivative_value\n")
        for row in trace:
            ham = "" if row.hamming_to_truth is None else row.hamming_to_truth
            fh.write(f"{row.query_index},{ham},{row.value:.10g}\n")


def cmd_attack(args) -> int:
    try:
        with open(args.config) as fh:
            config = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")
    if not isinstance(config, dict):
        raise ConfigError("config must be a JSON object")
    if args.seed is not None:
        config["seed"] = args.seed
    elif "seed" not in config:
        config["seed"] = _env_seed()
    report = bench.run_campaign(config, jobs=args.jobs)
    target = report.write_outputs(args.out)
    for (attack, norm), s in sorted(report.summaries.items()):
        avg = "n/a" if s.avg_queries is None else f"{s.avg_queries:.2f}"
        print(f"{attack} l{norm}: failure_rate={s.failure_rate:.4f} "
              f"avg_queries={avg} spend={s.spend:.2f}")
    print(f"outputs written to {target}")
    return 0


def _search_objective(kind: str, n: int, seed: int):
    """Toy objective for one-off sign searches: returns (objective,
    truth, label) where objective maps a sign vector to a score."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 7]))
    if kind == "linear":
        c = rng.uniform(0.2, 1.0, size=n) * rng.choice([-1, 1], size=n)
        truth = sign(c)
        return (lambda bits: float(c @ bits)), truth, c
    A = rng.standard_normal((n, n))
    Q = (A + A.T) / 2.0
    x = rng.uniform(1.0, 2.0, size=n)
    model = models.QuadraticModel(Q)
    gradient = model.gradient(x, 0)
    dd = DirectionalDerivativeOracle(ModelOracle(model), x, 0, delta=1e-3)
    return dd.evaluate, sign(gradient), gradient


def cmd_signsearch(args) -> int:
    seed = _resolve_seed(args)
    n = args.n
    objective, truth, _ = _search_objective(args.objective, n, seed)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 11]))

    if args.method == "signhunter":
        budget = args.budget or (1 << ((n - 1).bit_length() + 1)) - 1
        result = signsearch.signhunter_run(objective, n, budget, seed=rng,
                                           truth=truth)
    elif args.method == "seqflip":
        result = signsearch.sequential_flip(objective, n, seed=rng,
                                            truth=truth)
    elif args.method == "goo":
        if n > 20:
            raise ConfigError("goo supports n <= 20")
        budget = args.budget or (1 << n)
        result = signsearch.goo_run(objective, n, budget, truth=truth)
    else:
        if n > 20:
            raise ConfigError("elim supports n <= 20")
        oracle = NoiselessHammingOracle(truth)
        result = signsearch.elim_run(oracle, n, rng=rng, budget=args.budget,
                                     truth=truth)

    final_ham = sum(int(a != b) for a, b in zip(result.estimate.bits, truth))
    print(f"method={args.method} n={n} queries={result.queries_spent} "
          f"final_hamming_to_truth={final_ham}"
          + (" (flagged)" if result.flagged else ""))
    if args.out:
        _write_trace_csv(args.out, result.trace)
        print(f"trace written to {args.out}")
    return 0


def cmd_hamming_bench(args) -> int:
    seed = _resolve_seed(args)
    rows = signsearch.query_ratio_bench(range(1, args.n_max + 1),
                                        args.trials, seed=seed)
    print(f"{'strategy':<14}{'n':>4}{'mean_ratio':>12}{'bound':>10}")
    for row in rows:
        print(f"{row.strategy:<14}{row.n:>4}{row.mean_ratio:>12.4f}"
              f"{row.bound:>10.4f}")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("strategy,n,mean_ratio,bound\n")
            for row in rows:
                fh.write(f"{row.strategy},{row.n},{row.mean_ratio:.10g},"
                         f"{row.bound:.10g}\n")
        print(f"table written to {args.out}")
    return 0


def cmd_noisy_fgsm(args) -> int:
    seed = _resolve_seed(args)
    ks = [int(k) for k in args.ks.split(",")]
    if any(not 0 <= k <= 100 for k in ks):
        raise ConfigError("every k must be in [0, 100]")
    model, X, y = bench.default_mlp_setup(seed)
    idx, _ = bench.select_eval_set(model, X, y, args.images)
    p = bench.parse_norm(args.norm)
    rows = bench.run_noisy_fgsm_experiment(model, X[idx], y[idx],
                                           args.epsilon, ks=ks,
                                           num_seeds=args.seeds, p=p,
                                           seed=seed)
    means: dict = {}
    for mode, k, s, rate in rows:
        means.setdefault((mode, k), []).append(rate)
    print(f"{'mode':<8}{'k':>4}{'mean_rate':>11}")
    for (mode, k), rates in sorted(means.items()):
        print(f"{mode:<8}{k:>4}{np.mean(rates):>11.4f}")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("mode,k,seed,misclassification_rate\n")
            for mode, k, s, rate in rows:
                fh.write(f"{mode},{k},{s},{rate:.10g}\n")
        print(f"rows written to {args.out}")
    return 0


def cmd_contopt(args) -> int:
    seed = _resolve_seed(args)
    ns = [int(v) for v in args.ns.split(",")]
    if any(n < 1 for n in ns):
        raise ConfigError("every n must be >= 1")
    result = contopt.run_contopt_experiment(
        ns=ns, trials=args.trials, eval_budget=args.evals,
        step_size=args.step, fd_probe=args.probe,
        num_samples=args.samples, seed=seed)
    print(f"{'method':<12}{'n':>8}{'mean_final_loss':>17}")
    for n in ns:
        for method in contopt.CONTOPT_METHODS:
            print(f"{method:<12}{n:>8}{result.mean_final(method, n):>17.4f}")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("method,n,trial,eval_index,best_loss\n")
            for method, n, trial, idx, best in result.rows(stride=args.stride):
                fh.write(f"{method},{n},{trial},{idx},{best:.10g}\n")
        print(f"traces written to {args.out}")
    return 0


def bundled_models(seed: int):
    """The four built-in models with matching evaluation-point samplers.

    For the classifier the points come from its own data distribution;
    far outside it the softmax saturates and gradients vanish below the
    finite-difference noise floor, which says nothing about correctness.
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed, 21]))
    n = 12
    c = rng.uniform(0.2, 1.0, size=n) * rng.choice([-1, 1], size=n)
    linear = models.LinearModel(c, bias=0.3, input_range=(-10, 10))
    A = rng.standard_normal((n, n))
    quad = models.QuadraticModel((A + A.T) / 2.0, input_range=(-10, 10))
    concave = models.SyntheticConcaveLoss(n, input_range=(0.0, 1.0))
    mlp, X_test, _ = bench.default_mlp_setup(seed)

    def box_sampler(model, dim):
        lo = max(model.input_range[0], -3.0)
        hi = min(model.input_range[1], 3.0)
        return lambda r: r.uniform(lo, hi, size=dim)

    def data_sampler(r):
        return X_test[r.integers(X_test.shape[0])]

    return {
        "linear": (linear, box_sampler(linear, n)),
        "quadratic": (quad, box_sampler(quad, n)),
        "concave": (concave, box_sampler(concave, n)),
        "mlp": (mlp, data_sampler),
    }


def cmd_gradcheck(args) -> int:
    seed = _resolve_seed(args)
    table = bundled_models(seed)
    names = list(table) if args.model == "all" else [args.model]
    rng = np.random.default_rng(np.random.SeedSequence([seed, 22]))
    failed = False
    for name in names:
        model, sampler = table[name]
        worst = 0.0
        for _ in range(args.points):
            x = sampler(rng)
            y = model.predict(x)
            worst = max(worst, models.gradient_relative_error(model, x, y))
        ok = worst <= args.tolerance
        failed = failed or not ok
        print(f"{name}: {'ok' if ok else 'FAIL'} "
              f"(max relative error {worst:.3g})")
    return 1 if failed else 0


def cmd_maghist(args) -> int:
    seed = _resolve_seed(args)
    model, X, y = bench.default_mlp_setup(seed)
    idx, _ = bench.select_eval_set(model, X, y, args.images)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 23]))
    hists = models.magnitude_histogram(model, X[idx], y[idx],
                                       bins=args.bins,
                                       epsilon=args.epsilon, rng=rng)
    concs = [h.concentration for h in hists if math.isfinite(h.concentration)]
    label = "perturbed" if args.epsilon > 0 else "clean"
    print(f"{label} inputs: median concentration "
          f"{np.median(concs) if concs else float('nan'):.4f} over "
          f"{len(hists)} images")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("image_id,bin_lo,bin_hi,count,concentration\n")
            for h in hists:
                for b in range(len(h.counts)):
                    fh.write(f"{h.image_id},{h.bin_edges[b]:.10g},"
                             f"{h.bin_edges[b + 1]:.10g},{h.counts[b]},"
                             f"{h.concentration:.10g}\n")
        print(f"histograms written to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="signquest",
        description="Gradient-sign search and black-box attacks on toy models")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_seed(p):
        p.add_argument("--seed", type=int, default=None,
                       help="seed (default: SIGNQUEST_SEED env var, else 0)")

    p = sub.add_parser("attack", help="run an attack campaign from a config")
    p.add_argument("--config", required=True, help="campaign JSON file")
    p.add_argument("--out", default="results", help="output directory")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                   help="parallel workers over attacked inputs")
    add_seed(p)
    p.set_defaults(fn=cmd_attack)

    p = sub.add_parser("signsearch", help="run one sign-recovery search")
    p.add_argument("--method", required=True,
                   choices=["signhunter", "goo", "elim", "seqflip"])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--objective", choices=["linear", "quadratic"],
                   default="linear")
    p.add_argument("--out", default=None, help="trace CSV path")
    add_seed(p)
    p.set_defaults(fn=cmd_signsearch)

    p = sub.add_parser("hamming-bench",
                       help="query-ratio table against the retrieval bound")
    p.add_argument("--n-max", type=int, default=10)
    p.add_argument("--trials", type=int, default=30)
    p.add_argument("--out", default=None, help="CSV path")
    add_seed(p)
    p.set_defaults(fn=cmd_hamming_bench)

    p = sub.add_parser("noisy-fgsm", help="keep-k misclassification curves")
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--ks", default=",".join(str(k) for k in range(0, 101, 10)))
    p.add_argument("--seeds", type=int, default=30)
    p.add_argument("--images", type=int, default=50)
    p.add_argument("--norm", default="inf")
    p.add_argument("--out", default=None, help="CSV path")
    add_seed(p)
    p.set_defaults(fn=cmd_noisy_fgsm)

    p = sub.add_parser("contopt", help="derivative-free minimization traces")
    p.add_argument("--ns", default="1000", help="comma-separated dimensions")
    p.add_argument("--trials", type=int, default=30)
    p.add_argument("--evals", type=int, default=3000)
    p.add_argument("--step", type=float, default=0.01)
    p.add_argument("--probe", type=float, default=0.001)
    p.add_argument("--samples", type=int, default=10)
    p.add_argument("--stride", type=int, default=1,
                   help="subsample trace rows in the CSV")
    p.add_argument("--out", default=None, help="CSV path")
    add_seed(p)
    p.set_defaults(fn=cmd_contopt)

    p = sub.add_parser("gradcheck", help="finite-difference gradient audit")
    p.add_argument("--model", default="all",
                   choices=["all", "linear", "quadratic", "concave", "mlp"])
    p.add_argument("--points", type=int, default=20)
    p.add_argument("--tolerance", type=float, default=1e-4)
    add_seed(p)
    p.set_defaults(fn=cmd_gradcheck)

    p = sub.add_parser("maghist", help="gradient magnitude histograms")
    p.add_argument("--images", type=int, default=10)
    p.add_argument("--bins", type=int, default=20)
    p.add_argument("--epsilon", type=float, default=0.0,
                   help="uniform box perturbation radius before the gradient")
    p.add_argument("--out", default=None, help="CSV path")
    add_seed(p)
    p.set_defaults(fn=cmd_maghist)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports and exits
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
