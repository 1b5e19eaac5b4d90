"""Parametric-bootstrap DP confidence intervals (NoisyVar and NoisyCov).

Both methods release a few noisy moments and simulate normal data from them.
They then re-release the target statistic on each simulated dataset and use
half the central quantile range of those releases as the margin of error.
Data are assumed to lie in ``[0, 1]``, where every released moment has
sensitivity ``1/n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .inference import CiResult
from .mechanisms import Dataset

NOISE_MODES = ("budget_split", "as_printed")
_CHUNK = 200


@dataclass(frozen=True)
class BaselineConfig:
    """Settings for the parametric-bootstrap baselines.

    Attributes:
        mu: Total GDP budget of the interval.
        nsim: Number of simulated datasets.
        level: Confidence level.
        noise_mode: ``budget_split`` gives each of the ``k`` releases variance
            ``k / (n mu)^2``, which composes to exactly mu-GDP. ``as_printed``
            uses ``k B / (n mu)^2`` and requires ``B``.
        B: Only used by ``as_printed``.
    """

    mu: float
    nsim: int = 2000
    level: float = 0.9
    noise_mode: str = "budget_split"
    B: int | None = None

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if self.nsim < 100:
            raise ValueError("nsim must be at least 100")
        if not 0 < self.level < 1:
            raise ValueError("level must be in (0, 1)")
        if self.noise_mode not in NOISE_MODES:
            raise ValueError(f"noise_mode must be one of {NOISE_MODES}")
        if self.noise_mode == "as_printed" and not self.B:
            raise ValueError("as_printed noise needs B")

    def noise_var(self, n: int, k: int) -> float:
        """Variance of each of the ``k`` noisy releases for a size-``n`` dataset."""
        scale = self.B if self.noise_mode == "as_printed" else 1
        return k * scale / (n * self.mu) ** 2


def _check_unit(data: Dataset, arity: int) -> None:
    if len(data.columns) != arity:
        raise ValueError(f"expected {arity} column(s)")
    for lo, hi in data.bounds:
        if lo < 0 or hi > 1:
            raise ValueError("baselines expect data bounded in [0, 1]; rescale first")


def _margin(theta: np.ndarray, level: float) -> float:
    tail = (1.0 - level) / 2
    q_lo, q_hi = np.quantile(theta, [tail, 1.0 - tail])
    return max(0.0, (q_hi - q_lo) / 2)


def noisyvar_ci(data: Dataset, cfg: BaselineConfig, rng: np.random.Generator) -> CiResult:
    """NoisyVar interval for the mean of ``[0, 1]`` data."""
    _check_unit(data, 1)
    x = data.columns[0]
    n = len(x)
    sd = math.sqrt(cfg.noise_var(n, 2))
    m1 = x.mean() + rng.normal(0.0, sd)
    m2 = max(0.0, x.var(ddof=1) + rng.normal(0.0, sd))
    theta = np.empty(cfg.nsim)
    for start in range(0, cfg.nsim, _CHUNK):
        rows = min(_CHUNK, cfg.nsim - start)
        sim = np.clip(rng.normal(m1, math.sqrt(m2), size=(rows, n)), 0.0, 1.0)
        theta[start : start + rows] = sim.mean(axis=1) + rng.normal(0.0, sd, size=rows)
    moe = _margin(theta, cfg.level)
    return CiResult(m1 - moe, m1 + moe, cfg.level, "noisyvar", {"M1": m1, "M2": m2})


def noisycov_ci(data: Dataset, cfg: BaselineConfig, rng: np.random.Generator) -> CiResult:
    """NoisyCov interval for the covariance of ``[0, 1]^2`` data."""
    _check_unit(data, 2)
    x, y = data.columns
    n = len(x)
    sd = math.sqrt(cfg.noise_var(n, 3))
    m1 = max(0.0, x.var(ddof=1) + rng.normal(0.0, sd))
    m2 = max(0.0, y.var(ddof=1) + rng.normal(0.0, sd))
    raw = np.sum((x - x.mean()) * (y - y.mean())) / (n - 1) + rng.normal(0.0, sd)
    bound = math.sqrt(m1 * m2)
    m3 = min(bound, max(-bound, raw))
    # x' = sqrt(m1) z1, y' = (m3/sqrt(m1)) z1 + sqrt(m2 - m3^2/m1) z2
    a = math.sqrt(m1)
    b = m3 / a if a > 0 else 0.0
    c = math.sqrt(max(0.0, m2 - b * b))
    theta = np.empty(cfg.nsim)
    for start in range(0, cfg.nsim, _CHUNK):
        rows = min(_CHUNK, cfg.nsim - start)
        z1 = rng.standard_normal((rows, n))
        z2 = rng.standard_normal((rows, n))
        xs = a * z1
        ys = b * z1 + c * z2
        xs -= xs.mean(axis=1, keepdims=True)
        ys -= ys.mean(axis=1, keepdims=True)
        theta[start : start + rows] = np.sum(xs * ys, axis=1) / (n - 1) + rng.normal(
            0.0, sd, size=rows
        )
    moe = _margin(theta, cfg.level)
    flags = {"M1": m1, "M2": m2, "M3": m3, "M3_raw": float(raw)}
    return CiResult(m3 - moe, m3 + moe, cfg.level, "noisycov", flags)
