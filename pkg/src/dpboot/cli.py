"""Command-line interface: ``dpboot <verb> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys

import numpy as np

from . import accountant, diagnostics, harness, inference
from .mechanisms import Dataset, DpBootstrapOutput, dp_bootstrap


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _dump(obj, path: str | None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True, default=float)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def cmd_accountant(args) -> int:
    plan = accountant.plan_budget(args.mu_total, args.B, args.n)
    eps = np.asarray(_floats(args.eps))
    if args.n is not None and args.B <= args.cap:
        comp = accountant.BootComposition(plan.mu_per_sample, args.n, args.B, cap=args.cap)
        delta = comp.delta(eps)
    else:
        # without n, or beyond the cap, fall back to the limiting GDP profile
        delta = accountant.gdp_delta(plan.mu_total, eps)
    _dump(
        {
            "mu_total": plan.mu_total,
            "B": plan.B,
            "n": plan.n,
            "mu_per_sample": plan.mu_per_sample,
            "factor": plan.factor,
            "epsilon_grid": eps.tolist(),
            "delta_values": np.atleast_1d(delta).tolist(),
        },
        args.out,
    )
    return 0


def cmd_compose(args) -> int:
    eps = np.asarray(_floats(args.eps))
    comp = accountant.BootComposition(args.mu_B, args.n, args.B, cap=args.cap)
    _dump(
        {
            "mu_B": args.mu_B,
            "n": args.n,
            "B": args.B,
            "epsilon_grid": eps.tolist(),
            "delta_values": comp.delta(eps).tolist(),
            "mu_asymptotic": accountant.asymptotic_total_mu(args.mu_B, args.B, args.n),
        },
        args.out,
    )
    return 0


def _columns(args) -> tuple[str, ...]:
    return (args.col,) if args.col2 is None else (args.col, args.col2)


def _bounds(args, arity: int) -> tuple[tuple[float, float], ...]:
    lo = _floats(args.lo)
    hi = _floats(args.hi)
    if len(lo) == 1:
        lo = lo * arity
    if len(hi) == 1:
        hi = hi * arity
    return tuple(zip(lo, hi))


def cmd_run(args) -> int:
    cols = _columns(args)
    bounds = _bounds(args, len(cols))
    if args.raw:
        raw, dropped = harness.load_csv(args.csv, cols)
        data = Dataset.from_arrays(raw, bounds, strict=args.strict)
        out = dp_bootstrap(data, args.stat, args.mu, args.B, seed=args.seed)
        d = out.to_dict()
        d["meta"]["dropped_rows"] = dropped
        _dump(d, args.out)
        return 0
    cfg = harness.RunConfig(
        columns=cols,
        statistic=args.stat,
        bounds=bounds,
        mu=args.mu,
        B=args.B,
        level=args.level,
        seed=args.seed,
        methods=tuple(args.methods.split(",")),
        resample_n=args.resample_n,
        truth=args.truth,
        nsim=args.nsim,
        noise_mode=args.noise_mode,
        strict=args.strict,
    )
    _dump(harness.run_dataset(args.csv, cfg), args.out)
    return 0


def cmd_deconvolve(args) -> int:
    with open(args.input) as fh:
        out = DpBootstrapOutput.from_dict(json.load(fh))
    cfg = inference.DeconvConfig(m=args.m, p=args.p, c0=args.c0)
    dens = None
    if args.method == "percentile":
        dens = inference.deconvolve_mle(out.estimates, out.sigma2, cfg)
        ci = inference.percentile_ci(dens, args.level)
    elif args.method == "standard":
        ci = inference.standard_ci(out, args.level)
    else:
        ci = inference.t_ci_adjusted(out, args.level, cfg)
    if args.density_csv:
        dens = dens or inference.deconvolve_mle(out.estimates, out.sigma2, cfg)
        dens.to_csv(args.density_csv)
    _dump(
        {"method": ci.method, "level": ci.level, "lower": ci.lower, "upper": ci.upper, "flags": ci.flags},
        args.out,
    )
    return 0


def cmd_simulate(args) -> int:
    overrides = {
        "n": args.n,
        "B": args.B,
        "mus": _floats(args.mu) if args.mu else None,
        "levels": _floats(args.level) if args.level else None,
        "replicates": args.replicates,
        "seed": args.seed,
        "methods": args.methods.split(",") if args.methods else None,
        "statistic": args.stat,
        "data_model": args.data_model,
        "csv_path": args.csv,
        "nsim": args.nsim,
        "noise_mode": args.noise_mode,
    }
    if args.config:
        cfg = harness.SimConfig.from_json(args.config, **overrides)
    else:
        cfg = harness.SimConfig(**{k: v for k, v in overrides.items() if v is not None})
    report = harness.simulate_coverage(cfg, workers=args.workers)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(report.to_json() + "\n")
    for c in report.cells:
        mu = "-" if c.mu is None else f"{c.mu:g}"
        print(
            f"{c.method:13s} mu={mu:6s} level={c.level:.2f} coverage={c.coverage:.3f} "
            f"({c.coverage_se:.1e}) width={c.width:.4f} ({c.width_se:.1e}) failures={c.failures}"
        )
    return 0


def cmd_baseline(args) -> int:
    args.methods = args.method
    args.raw = False
    args.resample_n = None
    args.truth = None
    return cmd_run(args)


def cmd_curves(args) -> int:
    params = {"mu": args.mu, "n": args.n, "points": args.points}
    if args.kind == "composed_vs_gdp":
        params.update(mu0=args.mu, B=args.B)
    if args.a:
        params["a"] = _floats(args.a)
    curves = harness.emit_curve(args.kind, params, args.out_dir)
    for name in curves:
        print(f"{args.out_dir}/{name}.csv")
    return 0


def cmd_diag(args) -> int:
    d1, d2, t1, t3 = diagnostics.pld_delta_pair(args.eps)
    print(f"renyi2 = {diagnostics.zcdp_counterexample():.6f}")
    print(f"t1     = {t1:.7f}")
    print(f"delta1 = {d1:.7f}")
    print(f"t3     = {t3:.7f}")
    print(f"delta2 = {d2:.7f}")
    return 0


def _data_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--csv", required=True, help="input CSV with a header row")
    p.add_argument("--col", required=True, help="first column name")
    p.add_argument("--col2", help="second column name (covariance)")
    p.add_argument("--lo", default="0", help="lower bound(s), comma separated")
    p.add_argument("--hi", default="1", help="upper bound(s), comma separated")
    p.add_argument("--mu", type=float, default=1.0, help="total GDP budget")
    p.add_argument("--B", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--level", type=float, default=0.9)
    p.add_argument("--nsim", type=int, default=2000)
    p.add_argument("--noise-mode", default="budget_split", choices=["budget_split", "as_printed"])
    p.add_argument("--strict", action="store_true", help="reject out-of-bound values")
    p.add_argument("--out", help="write JSON here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dpboot", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("accountant", help="plan a budget and report the composed profile")
    p.add_argument("--mu-total", type=float, required=True)
    p.add_argument("--B", type=int, required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--eps", default="0,0.5,1,2,3")
    p.add_argument("--cap", type=int, default=accountant.DEFAULT_B_CAP)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_accountant)

    p = sub.add_parser("compose", help="delta(eps) of B composed bootstrap releases")
    p.add_argument("--mu-B", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--B", type=int, required=True)
    p.add_argument("--eps", default="0,0.5,1,2,3")
    p.add_argument("--cap", type=int, default=accountant.DEFAULT_B_CAP)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_compose)

    p = sub.add_parser("run", help="private intervals (or raw DP bootstrap) from a CSV")
    _data_opts(p)
    p.add_argument("--stat", default="mean", choices=["mean", "variance", "covariance"])
    p.add_argument("--methods", default="dp_bootstrap")
    p.add_argument("--resample-n", type=int)
    p.add_argument("--truth", type=float)
    p.add_argument("--raw", action="store_true", help="emit the DP bootstrap output only")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("deconvolve", help="interval from a DP bootstrap output JSON")
    p.add_argument("--input", required=True)
    p.add_argument("--method", default="percentile", choices=["percentile", "standard", "t"])
    p.add_argument("--level", type=float, default=0.9)
    p.add_argument("--m", type=int, default=101)
    p.add_argument("--p", type=int, default=5)
    p.add_argument("--c0", type=float, default=1.0)
    p.add_argument("--density-csv")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_deconvolve)

    p = sub.add_parser("simulate", help="coverage study")
    p.add_argument("--config", help="flat JSON config; flags override it")
    p.add_argument("--n", type=int)
    p.add_argument("--B", type=int)
    p.add_argument("--mu", help="comma-separated budgets")
    p.add_argument("--level", help="comma-separated levels")
    p.add_argument("--replicates", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--methods")
    p.add_argument("--stat", choices=["mean", "variance", "covariance"])
    p.add_argument("--data-model", choices=list(harness.DATA_MODELS))
    p.add_argument("--csv")
    p.add_argument("--nsim", type=int)
    p.add_argument("--noise-mode", choices=["budget_split", "as_printed"])
    p.add_argument("--workers", type=int)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("baseline", help="NoisyVar / NoisyCov interval from a CSV")
    _data_opts(p)
    p.add_argument("--method", default="noisyvar", choices=["noisyvar", "noisycov"])
    p.add_argument("--stat", default=None)
    p.set_defaults(fn=cmd_baseline)

    p = sub.add_parser("curves", help="write alpha,beta CSVs of privacy curves")
    p.add_argument("kind", choices=["boot_bound", "composed_vs_gdp", "worst_case_pairs"])
    p.add_argument("--mu", type=float, default=1.0, help="mu, or mu0 for composed_vs_gdp")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--B", type=int, default=500)
    p.add_argument("--a", help="comma-separated a values for worst_case_pairs")
    p.add_argument("--points", type=int, default=1001)
    p.add_argument("--out-dir", default="curves")
    p.set_defaults(fn=cmd_curves)

    p = sub.add_parser("diag", help="print the counterexample constants")
    p.add_argument("--eps", type=float, default=1.0)
    p.set_defaults(fn=cmd_diag)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    if getattr(args, "verb", None) == "baseline" and args.stat is None:
        args.stat = "mean" if args.method == "noisyvar" else "covariance"
    try:
        return args.fn(args)
    except (ValueError, accountant.CompositionTooLarge, FileNotFoundError) as exc:
        print(f"dpboot {args.verb}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
