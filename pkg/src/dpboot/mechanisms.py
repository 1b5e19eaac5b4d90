"""Gaussian mechanism and the DP bootstrap sampler."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .accountant import BOOT_FACTOR

logger = logging.getLogger(__name__)

STATISTICS = ("mean", "variance", "covariance")


class BoundsError(ValueError):
    """Raised in strict mode when data fall outside the declared bounds."""


@dataclass(frozen=True)
class Dataset:
    """One or two bounded numeric columns of equal length ``n >= 2``.

    Use :meth:`from_arrays` to build one from raw data, clamping or rejecting
    out-of-bound values.
    """

    columns: tuple[NDArray[np.float64], ...]
    bounds: tuple[tuple[float, float], ...]
    clamped: int = 0

    @classmethod
    def from_arrays(
        cls,
        columns: ArrayLike | Sequence[ArrayLike],
        bounds: Sequence[tuple[float, float]] | tuple[float, float] = (0.0, 1.0),
        strict: bool = False,
    ) -> "Dataset":
        cols = np.asarray(columns, dtype=float)
        if cols.ndim == 1:
            cols = cols[None, :]
        if cols.ndim != 2 or cols.shape[0] not in (1, 2):
            raise ValueError("dataset must have one or two columns")
        if np.ndim(bounds) == 1:
            bounds = [tuple(bounds)] * cols.shape[0]
        bounds = tuple((float(lo), float(hi)) for lo, hi in bounds)
        if len(bounds) != cols.shape[0]:
            raise ValueError("need one (lo, hi) pair per column")
        if cols.shape[1] < 2:
            raise ValueError("dataset needs at least two rows")
        if not np.all(np.isfinite(cols)):
            raise ValueError("dataset contains non-finite values")
        out = []
        clamped = 0
        for col, (lo, hi) in zip(cols, bounds):
            if not lo < hi:
                raise ValueError(f"invalid bounds [{lo}, {hi}]")
            bad = int(np.count_nonzero((col < lo) | (col > hi)))
            if bad and strict:
                raise BoundsError(f"{bad} values outside [{lo}, {hi}]")
            clamped += bad
            out.append(np.clip(col, lo, hi))
        if clamped:
            logger.warning("clamped %d values to the declared bounds", clamped)
        return cls(columns=tuple(out), bounds=bounds, clamped=clamped)

    @property
    def n(self) -> int:
        return len(self.columns[0])

    @property
    def width(self) -> tuple[float, ...]:
        return tuple(hi - lo for lo, hi in self.bounds)


@dataclass(frozen=True)
class Statistic:
    """A registered statistic. The sensitivity follows from the bounds and ``n``.

    The sensitivities for replacing one record are: mean ``w/n``, variance
    ``w^2/n``, covariance ``w_x w_y / n``. All three equal ``1/n`` on
    ``[0, 1]`` data.
    """

    id: str

    def __post_init__(self):
        if self.id not in STATISTICS:
            raise ValueError(f"unknown statistic {self.id!r}; choose from {STATISTICS}")

    @property
    def arity(self) -> int:
        return 2 if self.id == "covariance" else 1

    def sensitivity(self, data: Dataset) -> float:
        self._check(data)
        w = data.width
        if self.id == "mean":
            return w[0] / data.n
        if self.id == "variance":
            return w[0] ** 2 / data.n
        return w[0] * w[1] / data.n

    def _check(self, data: Dataset) -> None:
        if len(data.columns) != self.arity:
            raise ValueError(
                f"{self.id} needs {self.arity} column(s), dataset has {len(data.columns)}"
            )

    def __call__(self, data: Dataset, idx: NDArray[np.intp] | None = None) -> float:
        self._check(data)
        cols = data.columns if idx is None else tuple(c[idx] for c in data.columns)
        if self.id == "mean":
            return float(np.mean(cols[0]))
        if self.id == "variance":
            return float(np.var(cols[0], ddof=1))
        x, y = cols
        return float(np.sum((x - x.mean()) * (y - y.mean())) / (len(x) - 1))


def statistic_eval(data: Dataset, g: Statistic | str) -> float:
    g = Statistic(g) if isinstance(g, str) else g
    return g(data)


@dataclass
class DpBootstrapOutput:
    """Noisy bootstrap estimates together with the public noise variance."""

    estimates: NDArray[np.float64]
    sigma2: float
    meta: dict = field(default_factory=dict)
    clean: NDArray[np.float64] | None = None

    @property
    def B(self) -> int:
        return len(self.estimates)

    @property
    def n(self) -> int:
        return int(self.meta["n"])

    def to_dict(self) -> dict:
        return {
            "estimates": [float(v) for v in self.estimates],
            "sigma2": self.sigma2,
            "meta": self.meta,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "DpBootstrapOutput":
        return cls(np.asarray(d["estimates"], dtype=float), float(d["sigma2"]), dict(d["meta"]))


def _check_mu(mu: float) -> None:
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")


def gaussian_release(value: ArrayLike, delta: float, mu: float, rng: np.random.Generator):
    """Add ``N(0, (delta/mu)^2)`` noise to each coordinate of ``value``.

    ``mu = inf`` returns the value unchanged.
    """
    if not delta > 0:
        raise ValueError(f"sensitivity must be positive, got {delta}")
    _check_mu(mu)
    v = np.asarray(value, dtype=float)
    noisy = v + rng.normal(0.0, delta / mu, size=v.shape)
    return float(noisy) if noisy.ndim == 0 else noisy


def bootstrap_sigma2(delta: float, mu: float, B: int) -> float:
    """Per-release noise variance ``(2 - 2/e) B delta^2 / mu^2``."""
    return (BOOT_FACTOR * delta) ** 2 * B / mu**2


def replicate_rng(seed: int, b: int) -> np.random.Generator:
    """Independent Philox stream for bootstrap replicate ``b``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(b,))))


def resample_indices(n: int, rng: np.random.Generator) -> NDArray[np.intp]:
    """``n`` uniform draws with replacement from ``0..n-1`` via ``floor(u n)``."""
    return np.minimum((rng.random(n) * n).astype(np.intp), n - 1)


def dp_bootstrap(
    data: Dataset,
    g: Statistic | str,
    mu: float,
    B: int,
    seed: int = 0,
    keep_clean: bool = False,
) -> DpBootstrapOutput:
    """Release B noisy bootstrap estimates; jointly about mu-GDP.

    Each replicate draws a size-n resample and evaluates ``g``. It then adds
    ``N(0, sigma^2)`` with ``sigma = sqrt(2 - 2/e) * Delta_g * sqrt(B) / mu``.
    ``mu = inf`` gives the ordinary non-private bootstrap.

    Args:
        data: Bounded dataset.
        g: Statistic or its id.
        mu: Total GDP budget over all B releases.
        B: Number of bootstrap releases.
        seed: Seed; replicate ``b`` uses its own counter-based stream.
        keep_clean: Also retain the noiseless bootstrap values (for testing).
    """
    g = Statistic(g) if isinstance(g, str) else g
    _check_mu(mu)
    if int(B) != B or B < 1:
        raise ValueError("B must be a positive integer")
    delta = g.sensitivity(data)
    sigma2 = bootstrap_sigma2(delta, mu, B)
    sigma = math.sqrt(sigma2)
    n = data.n
    clean = np.empty(B)
    noisy = np.empty(B)
    for b in range(B):
        rng = replicate_rng(seed, b)
        clean[b] = g(data, resample_indices(n, rng))
        noisy[b] = clean[b] + sigma * rng.standard_normal()
    meta = {"n": n, "B": int(B), "mu": float(mu), "statistic": g.id, "seed": seed}
    return DpBootstrapOutput(noisy, sigma2, meta, clean if keep_clean else None)
