"""Command line entry point: ``python -m zosaddle <command>``.

Exit status is 0 on success, 1 if any replica (or check) failed and 2 on a
configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from ..estimators import grad_estimate, hess_vec_estimate, hessian_estimate, make_rng
from ..oracle import ModRosenbrockParams, make_benchmark, make_mod_rosenbrock, make_quadratic
from ..saddlesearch import deterministic_saddle_search
from ..schedules import Constant
from .config import ConfigError, ExperimentConfig, load_config
from .io import emit
from .runner import run_replicas
from .stats import SummaryTable, fit_decay_order, fit_linear_rate, plateau_stat, variance_study

log = logging.getLogger("zosaddle")


def _add_common(p: argparse.ArgumentParser, config: bool = True) -> None:
    if config:
        p.add_argument("config_path", nargs="?", help="experiment config (JSON)")
        p.add_argument("--config", dest="config_flag", help="experiment config (JSON)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed-base", type=int, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--quiet", action="store_true")


def _load(args) -> ExperimentConfig:
    path = args.config_flag or args.config_path
    if not path:
        raise ConfigError("no config given")
    cfg = load_config(path)
    if args.seed_base is not None:
        cfg = replace(cfg, seed_base=args.seed_base)
    if args.out is not None:
        cfg = replace(cfg, out=args.out)
    return cfg


def _out_dir(cfg_out, default: str) -> Path:
    return Path(cfg_out or default)


def cmd_run(args) -> int:
    cfg = _load(args)
    records = run_replicas(cfg, jobs=args.jobs)
    stats = {}
    ok = [r for r in records if r.ok]
    if ok and ok[0].dist_sq is not None:
        stats["plateau"] = plateau_stat(ok)
        try:
            stats["rates"] = [fit_linear_rate(r) for r in ok]
        except ValueError as exc:
            stats["rates"] = str(exc)
    if ok and ok[0].grad_norm_sq is not None:
        stats["final_grad_norm_sq"] = [float(r.grad_norm_sq[-1]) for r in ok]
    paths = emit(records, stats, _out_dir(cfg.out, "runs"), cfg.to_dict())
    log.info("wrote %d traces and %s", len(records), paths["summary"])
    if "plateau" in stats:
        log.info("plateau (mean min dist_sq) = %.3e", stats["plateau"])
    return 0 if len(ok) == len(records) else 1


def cmd_table(args) -> int:
    cfg = _load(args)
    if not cfg.ladder:
        raise ConfigError("table needs a 'ladder' section with 'lengths' and 'alphas'")
    lengths = [float(v) for v in cfg.ladder["lengths"]]
    alphas = [float(v) for v in cfg.ladder.get("alphas", [cfg.search.alpha_x(0)])]
    plateaus, failed = {}, 0
    out = _out_dir(cfg.out, "runs/table")
    for a in alphas:
        for l in lengths:
            sub = cfg.with_search(alpha_x=Constant(a), length=Constant(l))
            records = run_replicas(sub, jobs=args.jobs)
            good = [r for r in records if r.ok]
            failed += len(records) - len(good)
            plateaus[(l, a)] = plateau_stat(good)
            log.info("alpha=%g l=%g plateau=%.3e", a, l, plateaus[(l, a)])
            emit(records, {"plateau": plateaus[(l, a)]}, out / f"alpha_{a:g}_l_{l:g}", sub.to_dict())
    table = SummaryTable.from_plateaus(plateaus)
    orders = {}
    for a in alphas:
        if len(table.ladder(a)) >= 3:
            orders[str(a)] = fit_decay_order(table.ladder(a))
    emit([], {"table": table.to_list(), "fitted_order": orders}, out, cfg.to_dict(), d=len(cfg.x0))
    if not args.quiet:
        print(table.format())
        for a, o in orders.items():
            print(f"alpha={a}: fitted order {o:.2f}")
    return 0 if failed == 0 else 1


def cmd_variance(args) -> int:
    dims = [int(v) for v in args.dims.split(",")]
    rng = make_rng(args.seed_base or 0)
    if args.benchmark == "quadratic":
        rows = variance_study(lambda d: make_quadratic(np.eye(d)), lambda d, g: np.zeros(d), dims, args.samples, args.length, rng)
    elif args.benchmark == "mod_rosenbrock":
        rows = variance_study(
            lambda d: make_mod_rosenbrock(d, ModRosenbrockParams.index_pattern(d, 1, -50.0).s),
            lambda d, g: np.ones(d) + 0.5 * g.standard_normal(d),
            dims,
            args.samples,
            args.length,
            rng,
        )
    else:
        raise ConfigError(f"unknown variance benchmark {args.benchmark!r}")
    out = _out_dir(args.out, "runs/variance")
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "variance.json", "w") as fh:
        json.dump(rows, fh, indent=2)
        fh.write("\n")
    if not args.quiet:
        print(f"{'d':>5} {'std(Hv)':>12} {'std(H_v)':>12}")
        for row in rows:
            print(f"{row['d']:>5} {row['hessian_std']:>12.4e} {row['hessvec_std']:>12.4e}")
    return 0


def cmd_baseline(args) -> int:
    cfg = _load(args)
    obj = make_benchmark(cfg.benchmark, cfg.params)
    rec = deterministic_saddle_search(obj, cfg.x0, cfg.search.k, cfg.search.alpha_x, cfg.search.n_x_max)
    rec.meta["seed"] = None
    stats = {}
    if rec.grad_norm_sq is not None:
        stats["final_grad_norm_sq"] = float(rec.grad_norm_sq[-1])
    if rec.dist_sq is not None:
        stats["final_dist_sq"] = float(rec.dist_sq[-1])
    emit([rec], stats, _out_dir(cfg.out, "runs/baseline"), cfg.to_dict())
    if not args.quiet:
        print(json.dumps(stats))
    return 0 if rec.ok else 1


def cmd_estimator_check(args) -> int:
    """Monte-Carlo unbiasedness of F, H and H_v on f = x^T diag(2, -2) x / 2."""
    A = np.diag([2.0, -2.0])
    obj = make_quadratic(A)
    rng = make_rng(args.seed_base or 0)
    x = np.array([0.7, -0.3])
    v = np.array([0.6, 0.8])
    l = 1e-2
    n = args.samples
    r = rng.standard_normal((n, 2))
    checks = {
        "gradient": (grad_estimate(obj, x, r, l), A @ x),
        "hessian": (hessian_estimate(obj, x, r, l).reshape(n, 4), A.ravel()),
        "hessian_vector": (hess_vec_estimate(obj, x, v, r, l), A @ v),
    }
    failed = 0
    results = {}
    for name, (samples, target) in checks.items():
        mean = samples.mean(axis=0)
        se = samples.std(axis=0, ddof=1) / np.sqrt(n)
        z = np.abs(mean - target) / np.where(se > 0, se, 1.0)
        passed = bool(np.all(z <= 3.0))
        failed += not passed
        results[name] = {"mean": mean.tolist(), "target": target.tolist(), "max_z": float(z.max()), "pass": passed}
        if not args.quiet:
            print(f"{'PASS' if passed else 'FAIL'} {name}: max |z| = {z.max():.2f}")
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        with open(Path(args.out) / "estimator_check.json", "w") as fh:
            json.dump(results, fh, indent=2)
            fh.write("\n")
    return 0 if failed == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zosaddle", description="Derivative-free saddle search experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="replicated saddle search from a config")
    _add_common(p)
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("table", help="plateau ladder over (l, alpha)")
    _add_common(p)
    p.set_defaults(func=cmd_table)
    p = sub.add_parser("variance", help="dense-Hessian vs Hessian-vector estimator spread")
    _add_common(p, config=False)
    p.add_argument("--dims", default="2,10,50,100")
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--length", type=float, default=1e-4)
    p.add_argument("--benchmark", default="quadratic", choices=["quadratic", "mod_rosenbrock"])
    p.set_defaults(func=cmd_variance)
    p = sub.add_parser("baseline", help="deterministic saddle dynamics with exact derivatives")
    _add_common(p)
    p.set_defaults(func=cmd_baseline)
    p = sub.add_parser("estimator-check", help="Monte-Carlo unbiasedness of the estimators")
    _add_common(p, config=False)
    p.add_argument("--samples", type=int, default=1_000_000)
    p.set_defaults(func=cmd_estimator_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
