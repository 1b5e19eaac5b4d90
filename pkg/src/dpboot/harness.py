"""Monte-Carlo coverage studies, CSV-driven interval runs and curve export."""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .accountant import (
    BOOT_FACTOR,
    BootComposition,
    BootCurve,
    asymptotic_total_mu,
    worst_case_pair_curve,
)
from .baselines import BaselineConfig, noisycov_ci, noisyvar_ci
from .inference import (
    CiResult,
    DeconvConfig,
    bootstrap_percentile_ci,
    deconvolve_mle,
    percentile_ci,
)
from .mechanisms import Dataset, Statistic, dp_bootstrap
from .tradeoff import eval_gdp, write_curve_csv

METHODS = ("bootstrap", "dp_bootstrap", "noisyvar", "noisycov")
DATA_MODELS = ("uniform01", "resample_csv")
MISSING = {"", "na", "nan", "null", "none", "?"}
UNIFORM_TRUTH = {"mean": 0.5, "variance": 1.0 / 12.0, "covariance": 0.0}


@dataclass(frozen=True)
class SimConfig:
    """Coverage-study settings; field names double as JSON config keys."""

    n: int = 3000
    B: int = 200
    mus: tuple[float, ...] = (1.0,)
    levels: tuple[float, ...] = (0.9,)
    replicates: int = 300
    data_model: str = "uniform01"
    seed: int = 0
    methods: tuple[str, ...] = ("bootstrap", "dp_bootstrap")
    statistic: str = "mean"
    nsim: int = 2000
    noise_mode: str = "budget_split"
    csv_path: str | None = None
    columns: tuple[str, ...] = ()
    bounds: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        object.__setattr__(self, "mus", tuple(float(m) for m in self.mus))
        object.__setattr__(self, "levels", tuple(float(v) for v in self.levels))
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "bounds", tuple(float(b) for b in self.bounds))
        if self.replicates < 1:
            raise ValueError("replicates must be at least 1")
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.data_model not in DATA_MODELS:
            raise ValueError(f"data_model must be one of {DATA_MODELS}")
        bad = set(self.methods) - set(METHODS)
        if bad:
            raise ValueError(f"unknown methods {sorted(bad)}")
        if self.data_model == "resample_csv" and not self.csv_path:
            raise ValueError("resample_csv needs csv_path")
        Statistic(self.statistic)

    @classmethod
    def from_json(cls, path: str | Path, **overrides: Any) -> "SimConfig":
        """Load a flat JSON config; non-None keyword overrides win."""
        with open(path) as fh:
            raw = json.load(fh)
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        raw.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**raw)


@dataclass
class CellSummary:
    method: str
    mu: float | None
    level: float
    coverage: float
    coverage_se: float
    width: float
    width_se: float
    replicates: int
    failures: int


@dataclass
class CoverageReport:
    """Coverage and width summaries, plus per-replicate F*(theta) values."""

    config: dict
    cells: list[CellSummary]
    fstar: dict[str, list[float | None]] = field(default_factory=dict)

    def cell(self, method: str, mu: float | None = None, level: float = 0.9) -> CellSummary:
        for c in self.cells:
            if c.method == method and c.level == level and (c.mu == mu or method == "bootstrap"):
                return c
        raise KeyError((method, mu, level))

    def to_dict(self) -> dict:
        return {"config": self.config, "cells": [asdict(c) for c in self.cells], "fstar": self.fstar}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def calibration(self, key: str) -> tuple[np.ndarray, np.ndarray]:
        """Empirical CDF of F*(theta) for one method/mu key."""
        vals = np.sort([v for v in self.fstar[key] if v is not None])
        return vals, np.arange(1, len(vals) + 1) / len(vals)


def _mu_key(method: str, mu: float | None) -> str:
    return method if mu is None else f"{method}@mu={mu:g}"


def load_csv(path: str | Path, columns: Sequence[str]) -> tuple[np.ndarray, int]:
    """Read numeric columns from a headed CSV.

    Rows with a missing value in any requested column are dropped and
    counted. Any other non-numeric entry raises ``ValueError`` naming the
    file line.

    Returns:
        ``(array of shape (len(columns), rows), dropped_count)``.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        missing = [c for c in columns if c not in header]
        if missing:
            raise ValueError(f"{path}: columns {missing} not in header {header}")
        idx = [header.index(c) for c in columns]
        rows, dropped = [], 0
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) < len(header):
                raise ValueError(f"{path}:{line_no}: expected {len(header)} fields, got {len(row)}")
            cells = [row[i].strip() for i in idx]
            if any(c.lower() in MISSING for c in cells):
                dropped += 1
                continue
            try:
                rows.append([float(c) for c in cells])
            except ValueError:
                raise ValueError(f"{path}:{line_no}: non-numeric value in {cells}") from None
    if not rows:
        raise ValueError(f"{path}: no complete rows")
    return np.asarray(rows, dtype=float).T, dropped


def thread_cap() -> int:
    env = os.environ.get("DPBOOT_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _child_seeds(seed: int, r: int) -> tuple[np.random.Generator, int, np.random.Generator]:
    ss = np.random.SeedSequence(seed, spawn_key=(r,))
    data_ss, boot_ss, base_ss = ss.spawn(3)
    boot_seed = int(boot_ss.generate_state(1, np.uint64)[0])
    return np.random.default_rng(data_ss), boot_seed, np.random.default_rng(base_ss)


def _draw_data(cfg: SimConfig, rng: np.random.Generator, pool: np.ndarray | None) -> Dataset:
    arity = Statistic(cfg.statistic).arity
    if cfg.data_model == "uniform01":
        return Dataset.from_arrays(rng.random((arity, cfg.n)), (0.0, 1.0))
    idx = rng.integers(0, pool.shape[1], size=cfg.n)
    return Dataset.from_arrays(pool[:, idx], cfg.bounds)


def _run_replicate(args) -> list[tuple]:
    cfg, r, pool, truth = args
    data_rng, boot_seed, base_rng = _child_seeds(cfg.seed, r)
    data = _draw_data(cfg, data_rng, pool)
    records = []

    def attempt(method, mu, fn):
        try:
            cis, fstar = fn()
        except Exception as exc:  # counted, never dropped silently
            for level in cfg.levels:
                records.append((method, mu, level, None, None, repr(exc)))
            return
        for level, ci in zip(cfg.levels, cis):
            records.append((method, mu, level, ci.covers(truth), ci.width, None))
        records.append((method, mu, None, fstar, None, None))

    if "bootstrap" in cfg.methods:
        def boot():
            out = dp_bootstrap(data, cfg.statistic, math.inf, cfg.B, seed=boot_seed)
            cis = [bootstrap_percentile_ci(out.estimates, lv) for lv in cfg.levels]
            return cis, float(np.mean(out.estimates <= truth))
        attempt("bootstrap", None, boot)
    for mu in cfg.mus:
        if "dp_bootstrap" in cfg.methods:
            def dpb(mu=mu):
                out = dp_bootstrap(data, cfg.statistic, mu, cfg.B, seed=boot_seed)
                dens = deconvolve_mle(out.estimates, out.sigma2, DeconvConfig())
                return [percentile_ci(dens, lv) for lv in cfg.levels], float(dens.cdf(truth))
            attempt("dp_bootstrap", mu, dpb)
        for name, fn in (("noisyvar", noisyvar_ci), ("noisycov", noisycov_ci)):
            if name in cfg.methods:
                def base(mu=mu, fn=fn):
                    cis = [
                        fn(data, BaselineConfig(mu, cfg.nsim, lv, cfg.noise_mode, cfg.B), base_rng)
                        for lv in cfg.levels
                    ]
                    return cis, None
                attempt(name, mu, base)
    return records


def _true_value(cfg: SimConfig, pool: np.ndarray | None) -> float:
    if cfg.data_model == "uniform01":
        return UNIFORM_TRUTH[cfg.statistic]
    full = Dataset.from_arrays(pool, cfg.bounds)
    return Statistic(cfg.statistic)(full)


def simulate_coverage(cfg: SimConfig, workers: int | None = None) -> CoverageReport:
    """Estimate coverage and width of each enabled method over replicates.

    With ``resample_csv`` the CSV is the population: each replicate draws
    ``n`` rows with replacement, and the truth is the statistic on the full
    file. Results do not depend on the number of workers.
    """
    pool = None
    if cfg.data_model == "resample_csv":
        cols = cfg.columns or (("x", "y") if cfg.statistic == "covariance" else ("x",))
        pool, _ = load_csv(cfg.csv_path, cols)
    truth = _true_value(cfg, pool)
    workers = min(workers or thread_cap(), cfg.replicates)
    jobs = [(cfg, r, pool, truth) for r in range(cfg.replicates)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            results = list(ex.map(_run_replicate, jobs, chunksize=4))
    else:
        results = [_run_replicate(j) for j in jobs]

    hits: dict = {}
    widths: dict = {}
    fails: dict = {}
    fstar: dict = {}
    order: list = []
    for recs in results:
        for method, mu, level, a, b, err in recs:
            if level is None:
                fstar.setdefault(_mu_key(method, mu), []).append(a)
                continue
            key = (method, mu, level)
            if key not in hits:
                order.append(key)
                hits[key], widths[key], fails[key] = [], [], 0
            if err is not None:
                fails[key] += 1
            else:
                hits[key].append(bool(a))
                widths[key].append(b)
    cells = []
    for key in order:
        h = np.asarray(hits[key], dtype=float)
        w = np.asarray(widths[key], dtype=float)
        k = len(h)
        p = float(h.mean()) if k else math.nan
        cells.append(
            CellSummary(
                method=key[0],
                mu=key[1],
                level=key[2],
                coverage=p,
                coverage_se=math.sqrt(p * (1 - p) / k) if k else math.nan,
                width=float(w.mean()) if k else math.nan,
                width_se=float(w.std(ddof=1) / math.sqrt(k)) if k > 1 else 0.0,
                replicates=k,
                failures=fails[key],
            )
        )
    conf = asdict(cfg)
    conf["truth"] = truth
    return CoverageReport(config=conf, cells=cells, fstar=fstar)


@dataclass(frozen=True)
class RunConfig:
    """Settings for interval construction on a user CSV."""

    columns: tuple[str, ...]
    statistic: str = "mean"
    bounds: tuple[tuple[float, float], ...] = ((0.0, 1.0),)
    mu: float = 1.0
    B: int = 100
    level: float = 0.9
    seed: int = 0
    methods: tuple[str, ...] = ("dp_bootstrap",)
    resample_n: int | None = None
    truth: float | None = None
    nsim: int = 2000
    noise_mode: str = "budget_split"
    strict: bool = False


def _rescale_ci(ci: CiResult, stat: str, bounds) -> CiResult:
    if stat == "mean":
        lo, hi = bounds[0]
        a, b = lo + (hi - lo) * ci.lower, lo + (hi - lo) * ci.upper
    else:
        s = float(np.prod([hi - lo for lo, hi in bounds]))
        a, b = s * ci.lower, s * ci.upper
    return CiResult(a, b, ci.level, ci.method, ci.flags)


def run_dataset(csv_path: str | Path, cfg: RunConfig) -> dict:
    """Private intervals for one statistic of a CSV dataset.

    The baselines run on data rescaled to ``[0, 1]``, and their intervals
    are mapped back to the original units. Coverage indicators appear only
    when ``cfg.truth`` is given.
    """
    g = Statistic(cfg.statistic)
    if len(cfg.columns) != g.arity:
        raise ValueError(f"{g.id} needs {g.arity} column(s)")
    bounds = tuple(cfg.bounds) * (g.arity if len(cfg.bounds) == 1 else 1)
    raw, dropped = load_csv(csv_path, cfg.columns)
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(0,)))
    if cfg.resample_n:
        raw = raw[:, rng.integers(0, raw.shape[1], size=cfg.resample_n)]
    data = Dataset.from_arrays(raw, bounds, strict=cfg.strict)
    report: dict = {
        "n": data.n,
        "dropped_rows": dropped,
        "clamped_values": data.clamped,
        "statistic": g.id,
        "estimate": g(data),
        "intervals": {},
        "noise_variance": {},
    }
    for method in cfg.methods:
        if method in ("bootstrap", "dp_bootstrap"):
            mu = math.inf if method == "bootstrap" else cfg.mu
            out = dp_bootstrap(data, g, mu, cfg.B, seed=cfg.seed)
            report["noise_variance"][method] = out.sigma2
            if method == "bootstrap" or cfg.B < 10:
                ci = bootstrap_percentile_ci(out.estimates, cfg.level)
                if method == "dp_bootstrap":
                    ci = replace(ci, flags={"too_few_replicates": True})
            else:
                ci = percentile_ci(deconvolve_mle(out.estimates, out.sigma2), cfg.level)
            if method == "dp_bootstrap":
                mu_b = cfg.mu / (BOOT_FACTOR * math.sqrt(cfg.B))
                report["mu_finite_n"] = asymptotic_total_mu(mu_b, cfg.B, data.n)
        elif method in ("noisyvar", "noisycov"):
            expected = "mean" if method == "noisyvar" else "covariance"
            if g.id != expected:
                raise ValueError(f"{method} supports the {expected} only")
            unit = Dataset.from_arrays(
                [(c - lo) / (hi - lo) for c, (lo, hi) in zip(data.columns, data.bounds)], (0.0, 1.0)
            )
            bcfg = BaselineConfig(cfg.mu, cfg.nsim, cfg.level, cfg.noise_mode, cfg.B)
            fn = noisyvar_ci if method == "noisyvar" else noisycov_ci
            ci = _rescale_ci(fn(unit, bcfg, rng), g.id, data.bounds)
            report["noise_variance"][method] = bcfg.noise_var(data.n, 2 if method == "noisyvar" else 3)
        else:
            raise ValueError(f"unknown method {method!r}")
        entry = asdict(ci)
        if cfg.truth is not None:
            entry["covers_truth"] = ci.covers(cfg.truth)
        report["intervals"][method] = entry
    return report


def emit_curve(kind: str, params: dict, out_dir: str | Path | None = None) -> dict[str, tuple]:
    """Tabulate privacy curves; optionally write one ``alpha,beta`` CSV each.

    Kinds:
        ``boot_bound``: single-release bound, params ``mu``, ``n`` and
        optionally ``points``.
        ``composed_vs_gdp``: B releases at ``mu0 / sqrt(B)`` each, against
        ``G_{sqrt(2-2/e) mu0}``. Params ``mu0``, ``B``, ``n``.
        ``worst_case_pairs``: explicit test curves, params ``mu``, ``n`` and
        ``a`` (a list).

    Returns:
        Mapping from curve name to ``(alpha, beta)`` arrays.
    """
    points = int(params.get("points", 1001))
    grid = np.linspace(0.0, 1.0, points)
    curves: dict[str, tuple] = {}
    if kind == "boot_bound":
        mu, n = float(params["mu"]), int(params["n"])
        curves[f"boot_bound_mu{mu:g}_n{n}"] = (grid, np.asarray(BootCurve(mu, n)(grid)))
    elif kind == "composed_vs_gdp":
        mu0, B, n = float(params["mu0"]), int(params["B"]), int(params["n"])
        comp = BootComposition(mu0 / math.sqrt(B), n, B)
        beta = np.asarray(comp.tradeoff(grid))
        curves[f"composed_mu0{mu0:g}_B{B}_n{n}"] = (grid, beta)
        ref = BOOT_FACTOR * mu0
        curves[f"gdp_mu{ref:.6g}"] = (grid, np.asarray(eval_gdp(ref, grid)))
    elif kind == "worst_case_pairs":
        mu, n = float(params["mu"]), int(params["n"])
        for a in params.get("a", [0.0, 0.2, 0.4, 0.6, 0.8, 1.0]):
            curves[f"worst_case_a{float(a):g}_mu{mu:g}_n{n}"] = worst_case_pair_curve(a, n, mu)
    else:
        raise ValueError(f"unknown curve kind {kind!r}")
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, (a, b) in curves.items():
            write_curve_csv(out / f"{name}.csv", a, b)
    return curves
