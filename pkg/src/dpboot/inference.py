"""Inference from noisy bootstrap estimates.

The DP bootstrap returns ``Y_b = X_b + e_b``, where ``X_b`` is a draw from the
non-private bootstrap distribution and ``e_b ~ N(0, sigma^2)`` has known
variance. The law of ``X`` is recovered by penalized maximum likelihood on a
grid, with ``g = softmax(Q a)`` and ``Q`` a natural-spline basis. Percentile
intervals are read off the recovered CDF. Moment-based standard intervals and
adjusted-df t intervals are also available.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import optimize, stats
from scipy.special import logsumexp, ndtr

from .accountant import BOOT_FACTOR
from .mechanisms import DpBootstrapOutput

KINK_RADIUS = 1e-6
FEASIBILITY_BOUND = 144.0 * (1.0 - 1.0 / math.e)


@dataclass(frozen=True)
class DeconvConfig:
    """Deconvolution settings.

    Attributes:
        m: Number of support points for X.
        p: Degrees of freedom of the natural-spline basis.
        c0: Scale of the penalty ``c0 * ||a||_2``.
        grid_pad: Multiples of sigma by which the grid extends past the data.
        tol: Convergence threshold on the gradient sup-norm.
        max_iter: Newton iteration cap.
    """

    m: int = 101
    p: int = 5
    c0: float = 1.0
    grid_pad: float = 3.0
    tol: float = 1e-6
    max_iter: int = 500

    def __post_init__(self):
        if self.m < 10:
            raise ValueError("m must be at least 10")
        if self.p < 3:
            raise ValueError("p must be at least 3")
        if not self.c0 > 0:
            raise ValueError("c0 must be positive")


@dataclass(frozen=True)
class RecoveredDensity:
    """Discrete probability vector on an increasing support grid."""

    support: NDArray[np.float64]
    mass: NDArray[np.float64]
    iterations: int = 0
    converged: bool = True

    def __post_init__(self):
        if len(self.support) != len(self.mass) or len(self.support) == 0:
            raise ValueError("support and mass must have equal, non-zero length")
        if np.any(np.diff(self.support) <= 0):
            raise ValueError("support must be strictly increasing")
        if np.any(self.mass < 0) or abs(self.mass.sum() - 1.0) > 1e-10:
            raise ValueError("mass must be a probability vector")

    @property
    def mean(self) -> float:
        return float(self.mass @ self.support)

    @property
    def var(self) -> float:
        return float(self.mass @ (self.support - self.mean) ** 2)

    def _cell_edges(self) -> NDArray[np.float64]:
        x = self.support
        if len(x) == 1:
            return np.array([x[0], x[0]])
        mid = (x[1:] + x[:-1]) / 2
        return np.concatenate([[x[0] - (x[1] - x[0]) / 2], mid, [x[-1] + (x[-1] - x[-2]) / 2]])

    def cdf(self, t: ArrayLike):
        """CDF with mass spread uniformly over each grid cell."""
        F = np.concatenate([[0.0], np.cumsum(self.mass)])
        edges = self._cell_edges()
        if len(self.support) == 1:
            return np.where(np.asarray(t) >= edges[0], 1.0, 0.0)
        return np.interp(t, edges, F)

    def quantile(self, q: ArrayLike):
        q = np.asarray(q, dtype=float)
        edges = self._cell_edges()
        if len(self.support) == 1:
            return np.full(q.shape, edges[0]) if q.ndim else float(edges[0])
        F = np.concatenate([[0.0], np.cumsum(self.mass)])
        # drop flat stretches so the inverse is well defined
        keep = np.concatenate([[True], np.diff(F) > 0])
        out = np.interp(q, F[keep], edges[keep])
        return out if q.ndim else float(out)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "mass"])
            for x, f in zip(self.support, self.mass):
                w.writerow([f"{x:.10g}", f"{f:.10g}"])


@dataclass(frozen=True)
class CiResult:
    lower: float
    upper: float
    level: float
    method: str
    flags: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError("lower must not exceed upper")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def covers(self, theta: float) -> bool:
        return bool(self.lower <= theta <= self.upper)

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def natural_spline_basis(x: NDArray[np.float64], df: int) -> NDArray[np.float64]:
    """Natural cubic spline basis with ``df`` columns and no intercept.

    Uses the truncated-power form: ``x`` plus ``df - 1`` differences of
    ``d_k(x) = ((x - k_k)_+^3 - (x - k_K)_+^3) / (k_K - k_k)``. The
    ``df + 1`` knots sit at equispaced quantiles of ``x``.
    """
    knots = np.quantile(x, np.linspace(0.0, 1.0, df + 1))
    last = knots[-1]

    def d(k):
        return (np.maximum(x - knots[k], 0) ** 3 - np.maximum(x - last, 0) ** 3) / (last - knots[k])

    ref = d(len(knots) - 2)
    return np.column_stack([x] + [d(k) - ref for k in range(len(knots) - 2)])


class DeconvProblem:
    """Binned penalized likelihood for ``Y = X + N(0, sigma^2)`` on a grid."""

    def __init__(self, Y: ArrayLike, sigma2: float, cfg: DeconvConfig = DeconvConfig()):
        Y = np.asarray(Y, dtype=float)
        if sigma2 < 0:
            raise ValueError("sigma2 must be non-negative")
        s = math.sqrt(sigma2)
        lo, hi = Y.min() - cfg.grid_pad * s, Y.max() + cfg.grid_pad * s
        x = np.linspace(lo, hi, cfg.m)
        inner = (x[1:] + x[:-1]) / 2
        edges = np.concatenate([[-np.inf], inner, [np.inf]])
        self.counts = np.bincount(np.searchsorted(inner, Y, side="right"), minlength=cfg.m)
        self.counts = self.counts.astype(float)
        if s > 0:
            z = (edges[:, None] - x[None, :]) / s
            self.P = np.diff(ndtr(z), axis=0)
        else:
            self.P = np.eye(cfg.m)
        Q = natural_spline_basis(x, cfg.p)
        Q = Q - Q.mean(axis=0)
        # orthonormal columns (unit L2 norm), so c0 acts on a fixed scale
        self.Q = np.linalg.svd(Q, full_matrices=False)[0]
        self.support = x
        self.cfg = cfg

    def _parts(self, a):
        eta = self.Q @ a
        g = np.exp(eta - logsumexp(eta))
        f = self.P @ g
        return g, np.maximum(f, 1e-300)

    def objective(self, a: NDArray[np.float64]) -> float:
        """Penalized log-likelihood ``l(Y; a) - c0 ||a||``."""
        _, f = self._parts(a)
        return float(self.counts @ np.log(f) - self.cfg.c0 * np.linalg.norm(a))

    def loglik_gradient(self, a: NDArray[np.float64]) -> NDArray[np.float64]:
        """Gradient of the unpenalized log-likelihood."""
        g, f = self._parts(a)
        W = self.P * g[None, :] / f[:, None]
        return self.Q.T @ (self.counts @ (W - g[None, :]))

    def gradient(self, a: NDArray[np.float64]) -> NDArray[np.float64]:
        return self.loglik_gradient(a) - self.cfg.c0 * a / np.linalg.norm(a)

    def zero_is_optimal(self) -> bool:
        """Subgradient test at the penalty's kink: ``||grad l(0)|| <= c0``."""
        return bool(np.linalg.norm(self.loglik_gradient(np.zeros(self.cfg.p))) <= self.cfg.c0)

    def hessian(self, a: NDArray[np.float64]) -> NDArray[np.float64]:
        g, f = self._parts(a)
        y = self.counts
        W = self.P * g[None, :] / f[:, None]
        H_eta = np.diag(y @ W) - (W * y[:, None]).T @ W - y.sum() * (np.diag(g) - np.outer(g, g))
        nrm = np.linalg.norm(a)
        pen = (np.eye(len(a)) - np.outer(a, a) / nrm**2) / nrm
        return self.Q.T @ H_eta @ self.Q - self.cfg.c0 * pen

    def density(self, a: NDArray[np.float64]) -> NDArray[np.float64]:
        return self._parts(a)[0]

    def _newton_step(self, a, grad):
        # The objective is not concave in ``a`` everywhere. Where the Hessian
        # is indefinite, flip and floor its eigenvalues so the step still ascends.
        lam, vec = np.linalg.eigh(-self.hessian(a))
        floor = max(1e-8 * np.abs(lam).max(), 1e-12)
        lam = np.maximum(np.abs(lam), floor)
        return vec @ ((vec.T @ grad) / lam)

    def _radial_start(self) -> NDArray[np.float64]:
        """Best point on the ray from ``a = 0`` along the likelihood gradient."""
        u = self.loglik_gradient(np.zeros(self.cfg.p))
        u = u / np.linalg.norm(u)
        res = optimize.minimize_scalar(
            lambda r: -self.objective(r * u), bounds=(0.0, 10.0), method="bounded", options={"xatol": 1e-10}
        )
        return max(res.x, 1e-8) * u

    def _newton(self, a, start_iter):
        val = self.objective(a)
        for it in range(start_iter, self.cfg.max_iter):
            grad = self.gradient(a)
            if np.max(np.abs(grad)) <= self.cfg.tol:
                return a, it, True
            if np.linalg.norm(a) < KINK_RADIUS:
                # drifting into the kink, where Newton steps are meaningless
                return a, it, False
            step = self._newton_step(a, grad)
            t = 1.0
            while t > 1e-12:
                cand = a + t * step
                cval = self.objective(cand)
                if cval >= val:
                    break
                t /= 2
            else:
                return a, it, False
            a, val = cand, cval
        return a, self.cfg.max_iter, False

    def solve(self) -> tuple[NDArray[np.float64], int, bool]:
        """Damped Newton ascent with step halving, starting from ``a = 1``.

        The norm penalty has a kink at ``a = 0`` (the flat density), where the
        gradient is undefined. When the subgradient test holds there, ``a = 0``
        is returned directly. If Newton stalls next to the kink, it restarts
        once from the best point on the ray along the likelihood gradient.
        """
        if self.zero_is_optimal():
            return np.zeros(self.cfg.p), 0, True
        a, it, ok = self._newton(np.ones(self.cfg.p), 0)
        if not ok and np.linalg.norm(a) < KINK_RADIUS:
            a, it, ok = self._newton(self._radial_start(), it)
        return a, it, ok


def deconvolve_mle(
    Y: ArrayLike, sigma2: float, cfg: DeconvConfig = DeconvConfig()
) -> RecoveredDensity:
    """Penalized-MLE estimate of the law of X given ``Y = X + N(0, sigma2)``.

    Raises:
        ValueError: if fewer than 10 observations are given.
    """
    Y = np.asarray(Y, dtype=float)
    if len(Y) < 10:
        raise ValueError("deconvolution needs at least 10 observations")
    if np.ptp(Y) == 0 and sigma2 == 0:
        warnings.warn("all observations are equal; returning a point mass", RuntimeWarning)
        return RecoveredDensity(np.array([Y[0]]), np.array([1.0]))
    prob = DeconvProblem(Y, sigma2, cfg)
    a, iters, ok = prob.solve()
    if not ok:
        warnings.warn("deconvolution did not reach the gradient tolerance", RuntimeWarning)
    g = prob.density(a)
    return RecoveredDensity(prob.support, g / g.sum(), iterations=iters, converged=ok)


def percentile_ci(density: RecoveredDensity, level: float = 0.9) -> CiResult:
    if not 0 < level < 1:
        raise ValueError("level must be in (0, 1)")
    tail = (1.0 - level) / 2
    lo, hi = density.quantile([tail, 1.0 - tail])
    return CiResult(float(lo), float(max(lo, hi)), level, "percentile")


def moment_estimates(Y: ArrayLike, sigma2: float) -> tuple[float, float]:
    """Noise-corrected first and second moments of X."""
    Y = np.asarray(Y, dtype=float)
    return float(Y.mean()), float(np.mean(Y**2) - sigma2)


@dataclass(frozen=True)
class SeEstimate:
    point: float
    se: float
    clamped: bool


def estimate_with_se(out: DpBootstrapOutput) -> SeEstimate:
    """Point estimate and noise-corrected bootstrap standard error.

    ``se^2 = max(0, (n/(n-1) + 1/B) s_Y^2 - n/(n-1) sigma^2)``, where
    ``s_Y^2`` is the sample variance of the noisy estimates.
    """
    B = out.B
    if B < 2:
        raise ValueError("need at least two bootstrap estimates")
    n = out.n
    r = n / (n - 1)
    raw = (r + 1.0 / B) * np.var(out.estimates, ddof=1) - r * out.sigma2
    return SeEstimate(float(np.mean(out.estimates)), math.sqrt(max(0.0, raw)), bool(raw <= 0))


def standard_ci(out: DpBootstrapOutput, level: float = 0.9) -> CiResult:
    est = estimate_with_se(out)
    z = stats.norm.ppf(0.5 + level / 2)
    return CiResult(
        est.point - z * est.se, est.point + z * est.se, level, "standard", {"clamped": est.clamped}
    )


def is_feasible(n: int, mu: float, sigma_x2: float) -> bool:
    """Whether ``n mu^2 sigma_x^2 >= 144 (1 - 1/e)``."""
    return n * mu**2 * sigma_x2 >= FEASIBILITY_BOUND


def min_feasible_mu(n: int, sigma_x2: float) -> float:
    return math.sqrt(FEASIBILITY_BOUND / (n * sigma_x2))


def t_ci_adjusted(
    out: DpBootstrapOutput, level: float = 0.9, cfg: DeconvConfig = DeconvConfig()
) -> CiResult:
    """t interval with estimated degrees of freedom.

    Uses ``sigma_x^2 = n^2/(n-1) se^2 - n^2 sigma^2/(n-1)`` and
    ``df = (sigma_x^2 / (n se^2))^2 (B - 1)``. When ``sigma_x^2 <= 0`` the
    t interval is undefined. The percentile interval from deconvolution is
    returned instead, flagged as a fallback.
    """
    if out.B < 3:
        raise ValueError("need at least three bootstrap estimates")
    est = estimate_with_se(out)
    n = out.n
    sx2 = n**2 / (n - 1) * est.se**2 - n**2 * out.sigma2 / (n - 1)
    flags: dict = {"clamped": est.clamped}
    mu = out.meta.get("mu")
    if mu is not None and sx2 > 0 and math.isfinite(mu):
        flags["feasible"] = bool(is_feasible(n, mu, sx2))
    if sx2 <= 0:
        flags.update(fallback="percentile", feasible=False)
        ci = percentile_ci(deconvolve_mle(out.estimates, out.sigma2, cfg), level)
        return CiResult(ci.lower, ci.upper, level, "percentile", flags)
    df = (sx2 / (n * est.se**2)) ** 2 * (out.B - 1)
    q = stats.t.ppf(0.5 + level / 2, df)
    flags["df"] = float(df)
    return CiResult(est.point - q * est.se, est.point + q * est.se, level, "t_adjusted", flags)


def choose_B(n: int, mu: float, sigma_x2: float, alpha: float = 0.1) -> int:
    """Largest B with bootstrap-to-noise variance ratio at least 1, but at least ``2/alpha``."""
    if n < 2 or mu <= 0 or sigma_x2 < 0 or not 0 < alpha < 1:
        raise ValueError("invalid inputs to choose_B")
    b_min = math.ceil(2.0 / alpha - 1e-9)
    b_snr = math.floor((n - 1) * sigma_x2 * mu**2 / BOOT_FACTOR**2)
    return max(b_min, b_snr)


def bootstrap_percentile_ci(estimates: ArrayLike, level: float = 0.9) -> CiResult:
    """Plain percentile interval from noiseless bootstrap estimates."""
    tail = (1.0 - level) / 2
    lo, hi = np.quantile(np.asarray(estimates, dtype=float), [tail, 1.0 - tail])
    return CiResult(float(lo), float(hi), level, "percentile")
