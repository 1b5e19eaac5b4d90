"""Privacy accounting for the bootstrap with Gaussian base mechanisms.

One bootstrap release of a mu-GDP mechanism is covered by
``C_{1-p0}(mix{(p_i / (1 - p0), G_{i mu})})``, where ``p_i`` is the chance a
fixed record is drawn exactly ``i`` times. :class:`BootCurve` evaluates that
bound through its closed-form slope parameterization. B-fold composition is
done numerically on the privacy-loss distribution of the dominating pair.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import stats
from scipy.special import ndtr

from .tradeoff import (
    LOG_SLOPE_BOUND,
    MAX_BISECT,
    SLOPE_TOL,
    GaussianCurve,
    MixtureCurve,
    MixtureSpec,
    PrivacyProfile,
    SubsampledCurve,
    TradeoffCurve,
    _check_alpha,
    _out,
    fdp_from_profile,
)

BOOT_FACTOR = math.sqrt(2.0 - 2.0 / math.e)
TAIL_MASS = 1e-15
DEFAULT_B_CAP = 5000
MAX_LOSS_STEP = 5e-3


@dataclass(frozen=True)
class BinomialOccupancy:
    """Occupancy probabilities ``p_i = P(Binomial(n, 1/n) = i)``."""

    n: int
    probs: NDArray[np.float64]

    @property
    def p0(self) -> float:
        return float(self.probs[0])

    def truncation_index(self, tail: float = TAIL_MASS) -> int:
        """Smallest ``i_max >= 1`` with ``sum_{i > i_max} p_i < tail``."""
        sf = stats.binom.sf(np.arange(self.n + 1), self.n, 1.0 / self.n)
        below = np.nonzero(sf < tail)[0]
        i_max = int(below[0]) if len(below) else self.n
        return max(1, min(i_max, self.n))


def occupancy_probs(n: int) -> BinomialOccupancy:
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    n = int(n)
    logp = stats.binom.logpmf(np.arange(n + 1), n, 1.0 / n)
    return BinomialOccupancy(n=n, probs=np.exp(logp))


class BootCurve(TradeoffCurve):
    """Tradeoff bound for one bootstrap release of a mu-GDP mechanism.

    The inner mixture ``f_>`` is traced by ``t = log(-C)``::

        alpha(t) = sum_i w_i Phi(-t / (i mu) - i mu / 2)
        beta(t)  = sum_i w_i Phi( t / (i mu) - i mu / 2)

    with ``w_i = p_i / (1 - p0)``. Its fixed point sits at ``t = 0``, and the
    subsampling operator with ``p = 1 - p0`` is applied in closed form.
    """

    kind = "boot"
    symmetric = True

    def __init__(self, mu: float, n: int):
        if not np.isfinite(mu) or mu <= 0:
            raise ValueError(f"mu must be positive, got {mu}")
        occ = occupancy_probs(n)
        self.mu = float(mu)
        self.n = occ.n
        self.occupancy = occ
        self.i_max = occ.truncation_index()
        w = occ.probs[1 : self.i_max + 1]
        self.weights = w / w.sum()
        self.shifts = self.mu * np.arange(1, self.i_max + 1)
        self.p = 1.0 - occ.p0
        self.x_star = float(self._alpha_beta(np.asarray(0.0))[0])
        self.fp_star = self.p * self.x_star + (1.0 - self.p) * (1.0 - self.x_star)

    def inner_spec(self) -> MixtureSpec:
        return MixtureSpec(zip(self.weights, (GaussianCurve(s) for s in self.shifts)))

    def generic(self) -> SubsampledCurve:
        """The same bound assembled from the generic mixture and C_p classes."""
        return SubsampledCurve(MixtureCurve(self.inner_spec()), self.p, check=False)

    def _alpha_beta(self, t):
        t = np.asarray(t, dtype=float)[..., None]
        s = self.shifts
        a = ndtr(-t / s - s / 2) @ self.weights
        b = ndtr(t / s - s / 2) @ self.weights
        return a, b

    def _fp_at(self, t):
        a, b = self._alpha_beta(t)
        return a, b, self.p * b + (1.0 - self.p) * (1.0 - a)

    def _bisect_t(self, target, fn, increasing):
        lo = np.zeros(target.shape)
        hi = np.full(target.shape, LOG_SLOPE_BOUND)
        for _ in range(MAX_BISECT):
            if np.all(hi - lo <= SLOPE_TOL):
                break
            mid = 0.5 * (lo + hi)
            v = fn(mid)
            go_up = v < target if increasing else v > target
            lo = np.where(go_up, mid, lo)
            hi = np.where(go_up, hi, mid)
        return 0.5 * (lo + hi)

    def value(self, alpha):
        a, scalar = _check_alpha(alpha)
        p = self.p
        out = np.empty_like(a)
        left = a <= self.x_star
        right = a >= self.fp_star
        mid = ~left & ~right
        if np.any(left):
            al = a[left]
            t = self._bisect_t(al, lambda u: self._alpha_beta(u)[0], increasing=False)
            at, bt = self._alpha_beta(t)
            # first-order correction along the tangent of f_>
            beta_in = bt - np.exp(t) * (al - at)
            out[left] = p * beta_in + (1.0 - p) * (1.0 - al)
        out[mid] = self.x_star + self.fp_star - a[mid]
        if np.any(right):
            ar = a[right]
            t = self._bisect_t(ar, lambda u: self._fp_at(u)[2], increasing=True)
            at, _, ft = self._fp_at(t)
            slope = -p * np.exp(t) - (1.0 - p)
            out[right] = at + (ar - ft) / slope
        out = np.where(a == 0.0, 1.0, np.where(a == 1.0, 0.0, out))
        return _out(np.clip(out, 0.0, 1.0 - a), scalar)

    def _slope_left(self, x):
        """Derivative of ``C_p(f_>)`` for ``x <= x*``."""
        t = self._bisect_t(x, lambda u: self._alpha_beta(u)[0], increasing=False)
        return -self.p * np.exp(t) - (1.0 - self.p)

    def subdiff(self, alpha):
        a, scalar = _check_alpha(alpha)
        s = np.full_like(a, -1.0)
        left = a < self.x_star
        if np.any(left):
            s[left] = self._slope_left(a[left])
        right = a > self.fp_star
        if np.any(right):
            mirror = np.asarray(self.value(a[right]))
            s[right] = 1.0 / self._slope_left(np.minimum(mirror, self.x_star))
        s = np.where(a == 0.0, -np.inf, np.where(a == 1.0, 0.0, s))
        return _out(s, scalar), _out(s.copy(), scalar)

    def point_at_slope(self, slope, side="left"):
        c = np.atleast_1d(np.asarray(slope, dtype=float))
        scalar = np.ndim(slope) == 0
        alpha = np.empty_like(c)
        beta = np.empty_like(c)
        steep = c < -1.0
        if np.any(steep):
            inner = (c[steep] + 1.0 - self.p) / self.p
            with np.errstate(divide="ignore"):
                t = np.log(-inner)
            at, bt, ft = self._fp_at(t)
            alpha[steep], beta[steep] = at, ft
        at_one = c == -1.0
        alpha[at_one] = self.x_star if side == "left" else self.fp_star
        beta[at_one] = self.fp_star if side == "left" else self.x_star
        shallow = c > -1.0
        if np.any(shallow):
            with np.errstate(divide="ignore"):
                recip = np.where(c[shallow] == 0.0, -np.inf, 1.0 / c[shallow])
            ma, mb = self.point_at_slope(recip, side)
            alpha[shallow], beta[shallow] = mb, ma
        if scalar:
            return alpha[0], beta[0]
        return alpha, beta

    def argslope(self, slope, side="left"):
        a, _ = self.point_at_slope(slope, side)
        return _out(np.asarray(a), np.ndim(slope) == 0)

    def fixed_point(self) -> float:
        # midpoint of the linear piece joining (x*, f_p(x*)) and (f_p(x*), x*)
        return 0.5 * (self.x_star + self.fp_star)

    def __repr__(self) -> str:
        return f"BootCurve(mu={self.mu!r}, n={self.n!r})"


def boot_curve(mu: float, n: int) -> BootCurve:
    return BootCurve(mu, n)


def composition_factor(n: int | None = None) -> float:
    """``sqrt((2 - 1/n)(1 - (1 - 1/n)^n))``; ``n=None`` gives ``sqrt(2 - 2/e)``."""
    if n is None or n == math.inf:
        return BOOT_FACTOR
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    one_minus = -math.expm1(n * math.log1p(-1.0 / n)) if n > 1 else 1.0
    return math.sqrt((2.0 - 1.0 / n) * one_minus)


def per_sample_mu(mu_total: float, B: int) -> float:
    """Per-release mu so that B bootstrap releases are about ``mu_total``-GDP."""
    if mu_total <= 0:
        raise ValueError("mu_total must be positive")
    if int(B) != B or B < 1:
        raise ValueError("B must be a positive integer")
    return mu_total / (BOOT_FACTOR * math.sqrt(B))


def asymptotic_total_mu(mu_B: float, B: int, n: int | None = None) -> float:
    return composition_factor(n) * math.sqrt(B) * mu_B


@dataclass(frozen=True)
class BudgetPlan:
    mu_total: float
    B: int
    n: int | None
    mu_per_sample: float
    factor: float


def plan_budget(mu_total: float, B: int, n: int | None = None) -> BudgetPlan:
    """Split a total GDP budget across B bootstrap releases."""
    if mu_total <= 0:
        raise ValueError("mu_total must be positive")
    if int(B) != B or B < 1:
        raise ValueError("B must be a positive integer")
    factor = composition_factor(n)
    return BudgetPlan(
        mu_total=float(mu_total),
        B=int(B),
        n=n,
        mu_per_sample=mu_total / (factor * math.sqrt(B)),
        factor=factor,
    )


def gdp_delta(mu: float, eps: ArrayLike):
    """Closed-form privacy profile of mu-GDP."""
    e = np.asarray(eps, dtype=float)
    if mu == 0:
        return _out(np.zeros_like(e), e.ndim == 0)
    d = ndtr(-e / mu + mu / 2) - np.exp(e) * ndtr(-e / mu - mu / 2)
    return _out(np.clip(d, 0.0, 1.0), e.ndim == 0)


def balle_delta(mu: float, n: int, eps: ArrayLike):
    """``(eps', delta')`` for one bootstrap release from group-privacy profiles.

    Returns ``(eps', delta')`` with ``eps' = log(1 + (1 - p0)(e^eps - 1))`` and
    ``delta' = sum_i p_i delta_{G_{i mu}}(eps)``.
    """
    e = np.asarray(eps, dtype=float)
    occ = occupancy_probs(n)
    i_max = occ.truncation_index()
    d = sum(occ.probs[i] * np.asarray(gdp_delta(i * mu, e)) for i in range(1, i_max + 1))
    e_prime = np.log1p((1.0 - occ.p0) * np.expm1(e))
    return _out(np.asarray(e_prime), e.ndim == 0), _out(np.asarray(d), e.ndim == 0)


def worst_case_pair_curve(a: float, n: int, mu: float, num: int = 2001):
    """Errors of the rule ``{M < c}`` for ``D1 = (a, 0, ..., 0)``, ``D2 = (a-1, 0, ..., 0)``.

    ``M`` is the bootstrap mean released with noise ``N(0, 1/(n mu)^2)``. With
    ``u = c n mu`` the errors are ``alpha = sum_i p_i Phi(u - i a mu)`` and
    ``beta = sum_i p_i Phi(i (a-1) mu - u)``. Returns ``(alpha, beta)`` sorted
    by alpha, including the end points (0, 1) and (1, 0).
    """
    occ = occupancy_probs(n)
    i_max = occ.truncation_index()
    p = occ.probs[: i_max + 1]
    p = p / p.sum()
    i = np.arange(i_max + 1)
    lo = min(0.0, (a - 1) * mu * i_max) - 40.0
    hi = max(0.0, a * mu * i_max) + 40.0
    u = np.linspace(lo, hi, num)[:, None]
    alpha = ndtr(u - i * a * mu) @ p
    beta = ndtr(i * (a - 1) * mu - u) @ p
    alpha = np.concatenate([[0.0], alpha, [1.0]])
    beta = np.concatenate([[1.0], beta, [0.0]])
    order = np.argsort(alpha, kind="stable")
    return alpha[order], beta[order]


class CompositionTooLarge(RuntimeError):
    """Raised when exact numeric composition is requested beyond the B cap."""


class _LossDistribution:
    """Single-release privacy loss ``log(dQ/dP)`` under ``Q`` on a uniform grid.

    Loss values are ``lo + k * h``; mass sitting beyond the upper end of the
    grid is carried as an atom at +inf.
    """

    def __init__(self, cdf, lo: float, hi: float, h: float):
        k = int(math.ceil((hi - lo) / h))
        x = lo + h * np.arange(k + 1)
        edges = np.concatenate([[lo - h / 2], x + h / 2])
        c = cdf(edges)
        pmf = np.diff(c)
        pmf[0] += c[0]  # lower tail folded into the first bin
        self.lo = lo
        self.h = h
        self.pmf = np.clip(pmf, 0.0, None)
        self.inf_mass = max(0.0, 1.0 - float(c[-1]))
        self.x = x

    @property
    def mean(self) -> float:
        return float(self.pmf @ self.x / self.pmf.sum())

    @property
    def std(self) -> float:
        m = self.mean
        return float(np.sqrt(self.pmf @ (self.x - m) ** 2 / self.pmf.sum()))


def _cdf_quantile(cdf, q: float, lo: float, hi: float) -> float:
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if cdf(np.array([mid]))[0] < q:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12:
            break
    return 0.5 * (lo + hi)


class _ComposedLoss:
    """Distribution of the sum of B i.i.d. privacy losses, computed by FFT."""

    def __init__(
        self, cdf, B: int, support: tuple[float, float], points_per_sd: int, refine: int = 1
    ):
        a1 = _cdf_quantile(cdf, 1e-18, *support)
        b1 = _cdf_quantile(cdf, 1.0 - 1e-17, *support)
        coarse = _LossDistribution(cdf, a1, b1, (b1 - a1) / 4096)
        s1 = max(coarse.std, 1e-12)
        h = min(s1 / points_per_sd, (b1 - a1) / 8192, MAX_LOSS_STEP) / refine
        single = _LossDistribution(cdf, a1, b1, h)
        m1 = single.mean
        width = 2.0 * (14.0 * math.sqrt(B) * s1 + (b1 - a1))
        size = 1 << int(math.ceil(math.log2(max(width / h, 2 * len(single.pmf)))))
        spec = np.fft.rfft(single.pmf, size)
        summed = np.fft.irfft(spec**B, size)
        summed = np.clip(summed, 0.0, None)
        # unwrap the circular index around the expected index of the sum
        centre = B * (m1 - a1) / h
        k = np.arange(size)
        shift = np.round((centre - k) / size) * size
        idx = k + shift
        order = np.argsort(idx)
        self.values = B * a1 + h * idx[order]
        self.pmf = summed[order]
        self.inf_mass = 1.0 - (1.0 - single.inf_mass) ** B
        self.h = h
        # suffix sums for delta(eps) = sum_{s > eps} pmf (1 - e^{eps - s})
        w = self.pmf * np.exp(-np.maximum(self.values, 0.0))
        self._tail = np.concatenate([np.cumsum(self.pmf[::-1])[::-1], [0.0]])
        self._tail_w = np.concatenate([np.cumsum(w[::-1])[::-1], [0.0]])

    def delta(self, eps: NDArray[np.float64]) -> NDArray[np.float64]:
        j = np.searchsorted(self.values, eps, side="right")
        d = self._tail[j] - np.exp(eps) * self._tail_w[j] + self.inf_mass
        return np.clip(d, 0.0, 1.0)


class BootComposition:
    """Exact numeric B-fold composition of the one-release bootstrap bound.

    The bound ``C_p(f_>)`` is dominated by the pair ``(P, Q_p)`` in both
    orders, with ``Q_p = p0 P + (1 - p0) Q``. Here ``P`` and ``Q`` are the
    laws of the loss coordinate of the inner Gaussian mixtures, on which
    ``log(dQ/dP)`` is the identity. Each order is composed separately and
    the larger delta is reported.
    """

    def __init__(
        self,
        mu_B: float,
        n: int,
        B: int,
        *,
        cap: int = DEFAULT_B_CAP,
        points_per_sd: int = 256,
        check: bool = True,
    ):
        if mu_B <= 0:
            raise ValueError("mu_B must be positive")
        if int(B) != B or B < 1:
            raise ValueError("B must be a positive integer")
        if B > cap:
            raise CompositionTooLarge(
                f"B={B} exceeds the numeric composition cap {cap}; use the asymptotic "
                f"rule mu = sqrt(2 - 2/e) * sqrt(B) * mu_B (asymptotic_total_mu) instead"
            )
        self.mu_B = float(mu_B)
        self.n = int(n)
        self.B = int(B)
        curve = BootCurve(mu_B, n)
        self.curve = curve
        var = curve.shifts**2
        sd = curve.shifts
        w = curve.weights
        p0 = 1.0 - curve.p
        self.p0 = p0
        log_p0 = math.log(p0) if p0 > 0 else -math.inf

        def cdf_p(l):
            return ndtr((l[..., None] + var / 2) / sd) @ w

        def cdf_q(l):
            return ndtr((l[..., None] - var / 2) / sd) @ w

        def g_inv(x):
            # loss coordinate l with log(p0 + (1 - p0) e^l) = x, for x > log p0
            with np.errstate(divide="ignore", invalid="ignore"):
                return x + np.log1p(-p0 * np.exp(-x)) - math.log1p(-p0)

        def cdf_remove(x):
            x = np.asarray(x, dtype=float)
            out = np.zeros_like(x)
            ok = x > log_p0
            l = g_inv(x[ok])
            out[ok] = p0 * cdf_p(l) + (1.0 - p0) * cdf_q(l)
            return out

        def cdf_add(x):
            x = np.asarray(x, dtype=float)
            out = np.ones_like(x)
            ok = -x > log_p0
            out[ok] = 1.0 - cdf_p(g_inv(-x[ok]))
            return out

        top = float(curve.shifts[-1])
        span = top * top / 2 + 40.0 * top + 40.0
        self._cdfs = {"remove": (cdf_remove, (log_p0 if p0 > 0 else -span, span)),
                      "add": (cdf_add, (-span, -log_p0 if p0 > 0 else span))}
        self._points = points_per_sd
        self.orders = {
            name: _ComposedLoss(cdf, self.B, support, points_per_sd)
            for name, (cdf, support) in self._cdfs.items()
        }
        self.grid_discrepancy = None
        if check:
            self.grid_discrepancy = self._self_check()
            if self.grid_discrepancy > 1e-6:
                warnings.warn(
                    f"halving the loss grid moved delta by {self.grid_discrepancy:.2e}",
                    RuntimeWarning,
                    stacklevel=2,
                )

    def _self_check(self) -> float:
        probe = np.array([0.0, 0.25, 0.5, 1.0, 2.0, 4.0])
        fine = {
            name: _ComposedLoss(cdf, self.B, support, self._points, refine=2)
            for name, (cdf, support) in self._cdfs.items()
        }
        a = self.delta(probe)
        b = np.maximum(*(c.delta(probe) for c in fine.values()))
        return float(np.max(np.abs(a - b)))

    def delta(self, eps: ArrayLike):
        e = np.asarray(eps, dtype=float)
        if np.any(e < 0):
            raise ValueError("eps must be non-negative")
        d = np.maximum(*(c.delta(np.atleast_1d(e)) for c in self.orders.values()))
        return float(d[0]) if e.ndim == 0 else d.reshape(e.shape)

    def profile(self) -> PrivacyProfile:
        return PrivacyProfile(delta_at=lambda e: self.delta(e))

    def tradeoff(self, alpha: ArrayLike):
        return fdp_from_profile(self.profile(), alpha)


def compose_boot_delta(mu_B: float, n: int, B: int, eps: ArrayLike, *, cap: int = DEFAULT_B_CAP):
    """delta(eps) of B composed bootstrap releases, each mu_B-GDP before resampling."""
    return BootComposition(mu_B, n, B, cap=cap).delta(eps)
