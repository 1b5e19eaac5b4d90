"""Regression oracles showing where naive bootstrap accounting goes wrong.

Two small Gaussian-mixture examples are evaluated exactly:

* a Renyi-2 divergence that exceeds the zCDP budget of the base mechanism
  once the bootstrap is applied, and
* a pair of privacy-loss computations whose deltas show that a binomial
  subsampling profile does not dominate every neighbouring pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import logsumexp, ndtr

ROOT_BRACKET = (-20.0, 20.0)
ROOT_TOL = 1e-10


@dataclass(frozen=True)
class GaussianMixture1D:
    """Finite mixture of univariate normals given as (weight, mean, variance)."""

    components: tuple[tuple[float, float, float], ...]

    def __init__(self, components: Sequence[tuple[float, float, float]]):
        comps = tuple((float(w), float(m), float(v)) for w, m, v in components)
        if not comps:
            raise ValueError("mixture needs at least one component")
        w = np.array([c[0] for c in comps])
        v = np.array([c[2] for c in comps])
        if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be positive and sum to 1")
        if np.any(v <= 0):
            raise ValueError("variances must be positive")
        object.__setattr__(self, "components", comps)

    @classmethod
    def unit(cls, weights: Sequence[float], means: Sequence[float]) -> "GaussianMixture1D":
        return cls([(w, m, 1.0) for w, m in zip(weights, means)])

    @property
    def weights(self) -> np.ndarray:
        return np.array([c[0] for c in self.components])

    @property
    def means(self) -> np.ndarray:
        return np.array([c[1] for c in self.components])

    @property
    def sds(self) -> np.ndarray:
        return np.sqrt([c[2] for c in self.components])

    def pdf(self, x):
        x = np.asarray(x, dtype=float)[..., None]
        z = (x - self.means) / self.sds
        dens = np.exp(-0.5 * z**2) / (math.sqrt(2 * math.pi) * self.sds)
        return dens @ self.weights

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)[..., None]
        z = (x - self.means) / self.sds
        terms = -0.5 * z**2 - np.log(self.sds) - 0.5 * math.log(2 * math.pi)
        return logsumexp(terms, axis=-1, b=self.weights)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)[..., None]
        return ndtr((x - self.means) / self.sds) @ self.weights


def renyi2_divergence(P: GaussianMixture1D, Q: GaussianMixture1D) -> float:
    """Renyi divergence of order 2, ``log E_Q[(dP/dQ)^2]``, for a single-normal Q.

    Each cross term ``int N(a_i, s_i^2) N(a_j, s_j^2) / N(b, r^2)`` has a closed
    form. The divergence is infinite when ``1/s_i^2 + 1/s_j^2 <= 1/r^2``,
    because the integrand then does not decay.

    Raises:
        ValueError: if Q has more than one component.
    """
    if len(Q.components) != 1:
        raise ValueError("renyi2_divergence supports a single-normal Q only")
    _, b, r2 = Q.components[0]
    w, a, s2 = P.weights, P.means, P.sds**2
    A = 1 / s2[:, None] + 1 / s2[None, :] - 1 / r2
    if np.any(A <= 0):
        return math.inf
    lin = a[:, None] / s2[:, None] + a[None, :] / s2[None, :] - b / r2
    quad = a[:, None] ** 2 / s2[:, None] + a[None, :] ** 2 / s2[None, :] - b**2 / r2
    log_scale = 0.5 * math.log(r2) - 0.5 * np.log(s2[:, None] * s2[None, :] * A)
    log_terms = log_scale + 0.5 * (lin**2 / A - quad)
    return float(logsumexp(log_terms, b=np.outer(w, w)))


def _bisect_decreasing(fn, target: float, lo: float, hi: float, tol: float = ROOT_TOL) -> float:
    """Root of a decreasing function ``fn(t) = target`` on ``[lo, hi]``."""
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if fn(mid) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def pld_delta(fx: GaussianMixture1D, fy: GaussianMixture1D, eps: float) -> tuple[float, float]:
    """``delta = F_X(t) - e^eps F_Y(t)`` where ``log(f_X / f_Y)(t) = eps``.

    Assumes the log ratio is decreasing on the bracket. Returns ``(delta, t)``.
    """
    t = _bisect_decreasing(lambda u: float(fx.logpdf(u) - fy.logpdf(u)), eps, *ROOT_BRACKET)
    delta = float(fx.cdf(t) - math.exp(eps) * fy.cdf(t))
    return min(1.0, max(0.0, delta)), t


ZCDP_PAIR = (
    GaussianMixture1D.unit([0.25, 0.5, 0.25], [0.0, 1.0, 2.0]),
    GaussianMixture1D.unit([1.0], [0.0]),
)
PLD_PAIR_1 = (
    GaussianMixture1D.unit([0.25, 0.5, 0.25], [2.0, 0.0, -2.0]),
    GaussianMixture1D.unit([1.0], [2.0]),
)
PLD_PAIR_2 = (
    GaussianMixture1D.unit([0.25, 0.5, 0.25], [0.0, -1.0, -2.0]),
    GaussianMixture1D.unit([0.25, 0.5, 0.25], [0.0, 1.0, 2.0]),
)


def pld_delta_pair(eps: float) -> tuple[float, float, float, float]:
    """Deltas of the two bootstrap PLD example pairs at ``eps``.

    The first pair is the bootstrapped sum over ``(-1, 1)`` against ``(1, 1)``.
    The second is the binomial-subsampling pair. Returns
    ``(delta_1, delta_2, t_1, t_3)``, where ``t_1`` and ``t_3`` are the
    thresholds at which the density ratios equal ``e^eps``.
    """
    if eps < 0:
        raise ValueError("eps must be non-negative")
    d1, t1 = pld_delta(*PLD_PAIR_1, eps)
    d2, t3 = pld_delta(*PLD_PAIR_2, eps)
    return d1, d2, t1, t3


def zcdp_counterexample() -> float:
    """Renyi-2 divergence of one bootstrapped release for the two-record sum."""
    return renyi2_divergence(*ZCDP_PAIR)
