"""Tradeoff functions and the convex-analysis operations built on them.

A tradeoff function maps a type I error ``alpha`` to the smallest achievable
type II error ``beta``. Every curve here is convex and non-increasing on
[0, 1], lies below ``1 - alpha`` and vanishes at ``alpha = 1``.

Besides point evaluation, each curve exposes its subdifferential and the
inverse map ``slope -> alpha`` (:meth:`TradeoffCurve.argslope`). Mixtures are
assembled by matching slopes across components, and privacy profiles are
read off supporting lines, so both operations run on that inverse map.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import optimize
from scipy.special import ndtr, ndtri

# Bracket for bisection over t = log(-C).
LOG_SLOPE_BOUND = 50.0
SLOPE_TOL = 1e-12
MAX_BISECT = 200
SYMMETRY_TOL = 1e-8

_DOMAIN_SLACK = 1e-12


def _check_alpha(alpha: ArrayLike) -> tuple[NDArray[np.float64], bool]:
    a = np.asarray(alpha, dtype=float)
    if np.any(np.isnan(a)):
        raise ValueError("alpha must not be NaN")
    if np.any(a < -_DOMAIN_SLACK) or np.any(a > 1 + _DOMAIN_SLACK):
        raise ValueError("alpha must lie in [0, 1]")
    return np.clip(a, 0.0, 1.0), a.ndim == 0


def _out(x: NDArray[np.float64], scalar: bool):
    return float(x) if scalar else x


def _slope_to_t(slope: NDArray[np.float64]) -> NDArray[np.float64]:
    with np.errstate(divide="ignore"):
        return np.log(-slope)


class TradeoffCurve:
    """Base class for tradeoff curves.

    Subclasses implement :meth:`value`, :meth:`subdiff` and :meth:`argslope`.
    Generic fallbacks for :meth:`inverse` and :meth:`fixed_point` work by
    bisection and root finding on :meth:`value`.
    """

    kind: str = "abstract"
    symmetric: bool = False

    def value(self, alpha: ArrayLike):
        raise NotImplementedError

    def __call__(self, alpha: ArrayLike):
        return self.value(alpha)

    def subdiff(self, alpha: ArrayLike):
        """Return ``(lo, hi)``, the end points of the subdifferential at ``alpha``."""
        raise NotImplementedError

    def argslope(self, slope: ArrayLike, side: str = "left"):
        """Smallest (``side="left"``) or largest (``"right"``) alpha whose
        subdifferential contains ``slope``.

        Slopes steeper than anything on the curve map to 0 and slopes
        shallower than anything on the curve map to 1.
        """
        raise NotImplementedError

    def point_at_slope(self, slope: ArrayLike, side: str = "left"):
        alpha = np.asarray(self.argslope(slope, side), dtype=float)
        return alpha, np.asarray(self.value(alpha), dtype=float)

    def inverse(self, beta: ArrayLike):
        """``inf {alpha : f(alpha) <= beta}``."""
        b, scalar = _check_alpha(beta)
        if self.symmetric:
            return _out(np.asarray(self.value(b), dtype=float), scalar)
        lo = np.zeros_like(b)
        hi = np.ones_like(b)
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            below = np.asarray(self.value(mid)) <= b
            hi = np.where(below, mid, hi)
            lo = np.where(below, lo, mid)
        res = np.where(np.asarray(self.value(lo)) <= b, lo, hi)
        return _out(res, scalar)

    def fixed_point(self) -> float:
        g = lambda x: float(self.value(x)) - x
        if g(0.0) <= 0.0:
            return 0.0
        return optimize.brentq(g, 0.0, 1.0, xtol=1e-15, rtol=4 * np.finfo(float).eps)

    def tabulate(self, n: int = 201) -> "TabulatedCurve":
        a = np.linspace(0.0, 1.0, n)
        return TabulatedCurve(np.column_stack([a, self.value(a)]))


class IdentityCurve(TradeoffCurve):
    """``Id(alpha) = 1 - alpha``: two indistinguishable distributions."""

    kind = "identity"
    symmetric = True

    def value(self, alpha):
        a, scalar = _check_alpha(alpha)
        return _out(1.0 - a, scalar)

    def subdiff(self, alpha):
        a, scalar = _check_alpha(alpha)
        lo = np.where(a == 0.0, -np.inf, -1.0)
        hi = np.where(a == 1.0, 0.0, -1.0)
        return _out(lo, scalar), _out(hi, scalar)

    def argslope(self, slope, side="left"):
        c = np.asarray(slope, dtype=float)
        at = 0.0 if side == "left" else 1.0
        res = np.where(c < -1.0, 0.0, np.where(c > -1.0, 1.0, at))
        return _out(res, c.ndim == 0)

    def fixed_point(self) -> float:
        return 0.5

    def __repr__(self) -> str:
        return "IdentityCurve()"


class GaussianCurve(TradeoffCurve):
    """``G_mu(alpha) = Phi(Phi^{-1}(1 - alpha) - mu)``."""

    kind = "gdp"
    symmetric = True

    def __init__(self, mu: float):
        if not np.isfinite(mu) or mu < 0:
            raise ValueError(f"mu must be a finite non-negative number, got {mu}")
        self.mu = float(mu)

    def value(self, alpha):
        a, scalar = _check_alpha(alpha)
        # Phi^{-1}(1 - a) == -Phi^{-1}(a) keeps precision for small a.
        return _out(ndtr(-ndtri(a) - self.mu), scalar)

    def subdiff(self, alpha):
        a, scalar = _check_alpha(alpha)
        if self.mu == 0.0:
            return IdentityCurve().subdiff(alpha)
        z = -ndtri(a)
        with np.errstate(over="ignore"):
            s = -np.exp(self.mu * z - 0.5 * self.mu**2)
        s = np.where(a == 0.0, -np.inf, np.where(a == 1.0, 0.0, s))
        return _out(s, scalar), _out(s.copy(), scalar)

    def _alpha_beta_at_t(self, t):
        mu = self.mu
        return ndtr(-t / mu - mu / 2), ndtr(t / mu - mu / 2)

    def argslope(self, slope, side="left"):
        if self.mu == 0.0:
            return IdentityCurve().argslope(slope, side)
        c = np.asarray(slope, dtype=float)
        a, _ = self._alpha_beta_at_t(_slope_to_t(c))
        return _out(np.asarray(a, dtype=float), c.ndim == 0)

    def point_at_slope(self, slope, side="left"):
        if self.mu == 0.0:
            return super().point_at_slope(slope, side)
        c = np.asarray(slope, dtype=float)
        a, b = self._alpha_beta_at_t(_slope_to_t(c))
        return np.asarray(a, dtype=float), np.asarray(b, dtype=float)

    def fixed_point(self) -> float:
        return float(ndtr(-self.mu / 2))

    def __repr__(self) -> str:
        return f"GaussianCurve(mu={self.mu!r})"


class EpsDeltaCurve(TradeoffCurve):
    """``f_{eps,delta}(alpha) = max{0, 1-delta-e^eps alpha, e^-eps (1-delta-alpha)}``."""

    kind = "epsdelta"
    symmetric = True

    def __init__(self, eps: float, delta: float):
        if not np.isfinite(eps) or eps < 0:
            raise ValueError(f"eps must be finite and non-negative, got {eps}")
        if not 0.0 <= delta <= 1.0:
            raise ValueError(f"delta must lie in [0, 1], got {delta}")
        self.eps = float(eps)
        self.delta = float(delta)
        self._kink = (1.0 - self.delta) / (1.0 + np.exp(self.eps))
        self._zero = 1.0 - self.delta
        self._s1 = -np.exp(self.eps)
        self._s2 = -np.exp(-self.eps)

    def value(self, alpha):
        a, scalar = _check_alpha(alpha)
        e = np.exp(self.eps)
        v = np.maximum.reduce(
            [np.zeros_like(a), 1.0 - self.delta - e * a, (1.0 - self.delta - a) / e]
        )
        return _out(v, scalar)

    def subdiff(self, alpha):
        a, scalar = _check_alpha(alpha)
        k, z, s1, s2 = self._kink, self._zero, self._s1, self._s2
        lo = np.select([a < k, a < z, True], [s1, s2, 0.0])
        hi = np.select([a < k, a < z, True], [s1, s2, 0.0])
        # kinks and the boundary
        lo = np.where(np.isclose(a, k, rtol=0, atol=1e-15) & (a < z), s1, lo)
        hi = np.where(np.isclose(a, k, rtol=0, atol=1e-15) & (a < z), s2, hi)
        lo = np.where(np.isclose(a, z, rtol=0, atol=1e-15), np.minimum(s2, lo), lo)
        hi = np.where(np.isclose(a, z, rtol=0, atol=1e-15), 0.0, hi)
        lo = np.where(a == 0.0, -np.inf, lo)
        return _out(lo, scalar), _out(hi, scalar)

    def argslope(self, slope, side="left"):
        c = np.asarray(slope, dtype=float)
        k, z, s1, s2 = self._kink, self._zero, self._s1, self._s2
        left = side == "left"
        if s1 == s2:  # eps == 0: a single linear piece then the zero piece
            res = np.select(
                [c < s1, c == s1, c < 0.0, True],
                [0.0, 0.0 if left else z, z, z if left else 1.0],
            )
        else:
            res = np.select(
                [c < s1, c == s1, c < s2, c == s2, c < 0.0, True],
                [0.0, 0.0 if left else k, k, k if left else z, z, z if left else 1.0],
            )
        return _out(np.asarray(res, dtype=float), c.ndim == 0)

    def fixed_point(self) -> float:
        return float(self._kink)

    def __repr__(self) -> str:
        return f"EpsDeltaCurve(eps={self.eps!r}, delta={self.delta!r})"


@dataclass(frozen=True)
class MixtureSpec:
    """Weighted components ``{(p_i, f_i)}`` of a mixture tradeoff function."""

    components: tuple[tuple[float, TradeoffCurve], ...]

    def __init__(self, components: Iterable[tuple[float, TradeoffCurve]]):
        comps = tuple((float(w), f) for w, f in components)
        if not comps:
            raise ValueError("a mixture needs at least one component")
        weights = np.array([w for w, _ in comps])
        if np.any(weights <= 0) or np.any(weights > 1):
            raise ValueError("mixture weights must lie in (0, 1]")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError(f"mixture weights sum to {weights.sum()!r}, not 1")
        for _, f in comps:
            if not isinstance(f, TradeoffCurve):
                raise TypeError(f"component {f!r} is not a TradeoffCurve")
        object.__setattr__(self, "components", comps)

    @property
    def weights(self) -> NDArray[np.float64]:
        return np.array([w for w, _ in self.components])

    @property
    def curves(self) -> list[TradeoffCurve]:
        return [f for _, f in self.components]


class MixtureCurve(TradeoffCurve):
    """The slope-matched mixture of tradeoff functions.

    For a slope ``C`` each component contributes its point of tangency
    ``(alpha_i, f_i(alpha_i))`` and the mixture point is their weighted
    average. Evaluating at a given alpha bisects on ``log(-C)``, along which
    the matched alpha is monotone.
    """

    kind = "mixture"

    def __init__(self, spec: MixtureSpec):
        self.spec = spec
        self.symmetric = all(f.symmetric for f in spec.curves)

    def argslope(self, slope, side="left"):
        c = np.asarray(slope, dtype=float)
        total = sum(w * np.asarray(f.argslope(c, side)) for w, f in self.spec.components)
        return _out(np.asarray(total, dtype=float), c.ndim == 0)

    def point_at_slope(self, slope, side="left"):
        c = np.asarray(slope, dtype=float)
        a = np.zeros(c.shape)
        b = np.zeros(c.shape)
        for w, f in self.spec.components:
            ai, bi = f.point_at_slope(c, side)
            a = a + w * ai
            b = b + w * bi
        return a, b

    def _solve_t(self, a: NDArray[np.float64], side: str) -> NDArray[np.float64]:
        """Bisection on t = log(-C).

        ``side="left"`` returns the smallest t with ``alpha_left(t) <= a``;
        ``side="right"`` returns the largest t with ``alpha_right(t) >= a``.
        """
        lo = np.full(a.shape, -LOG_SLOPE_BOUND)
        hi = np.full(a.shape, LOG_SLOPE_BOUND)
        for _ in range(MAX_BISECT):
            if np.all(hi - lo <= SLOPE_TOL):
                break
            mid = 0.5 * (lo + hi)
            am = np.asarray(self.argslope(-np.exp(mid), side))
            if side == "left":
                ok = am <= a
                hi = np.where(ok, mid, hi)
                lo = np.where(ok, lo, mid)
            else:
                ok = am >= a
                lo = np.where(ok, mid, lo)
                hi = np.where(ok, hi, mid)
        return hi if side == "left" else lo

    def value(self, alpha):
        a, scalar = _check_alpha(alpha)
        t = self._solve_t(a, "left")
        c = -np.exp(t)
        al, bl = self.point_at_slope(c, "left")
        # Along a flat stretch of the matched alpha the mixture is linear with slope c.
        beta = bl + c * (a - al)
        at0 = sum(w * np.asarray(f.value(0.0)) for w, f in self.spec.components)
        beta = np.where(a == 0.0, at0, np.where(a == 1.0, 0.0, beta))
        beta = np.clip(beta, 0.0, 1.0 - a)
        return _out(beta, scalar)

    def subdiff(self, alpha):
        a, scalar = _check_alpha(alpha)
        t_lo = self._solve_t(a, "left")
        t_hi = self._solve_t(a, "right")
        lo = -np.exp(np.maximum(t_lo, t_hi))
        hi = -np.exp(np.minimum(t_lo, t_hi))
        lo = np.where(a == 0.0, -np.inf, lo)
        hi = np.where(a == 1.0, 0.0, hi)
        return _out(lo, scalar), _out(hi, scalar)

    def __repr__(self) -> str:
        return f"MixtureCurve({len(self.spec.components)} components)"


class SubsampledCurve(TradeoffCurve):
    """``C_p(f)`` for a symmetric ``f`` in its piecewise closed form.

    With ``f_p = p f + (1 - p) Id`` and ``x*`` the fixed point of ``f``::

        C_p(f)(x) = f_p(x)                  on [0, x*]
                    x* + f_p(x*) - x        on [x*, f_p(x*)]
                    f_p^{-1}(x)             on [f_p(x*), 1]
    """

    kind = "subsampled"
    symmetric = True

    def __init__(self, inner: TradeoffCurve, p: float, *, check: bool = True):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {p}")
        if check and not is_symmetric(inner):
            raise ValueError("C_p is only defined here for symmetric tradeoff functions")
        self.inner = inner
        self.p = float(p)
        self.x_star = float(inner.fixed_point())
        self.fp_star = float(self._fp(np.asarray(self.x_star)))

    def _fp(self, x):
        return self.p * np.asarray(self.inner.value(x)) + (1.0 - self.p) * (1.0 - x)

    def _fp_inverse(self, y: NDArray[np.float64]) -> NDArray[np.float64]:
        # f_p is strictly decreasing on [0, x*]
        lo = np.zeros_like(y)
        hi = np.full_like(y, self.x_star)
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            above = self._fp(mid) > y
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
            if np.all(hi - lo <= 1e-16):
                break
        return 0.5 * (lo + hi)

    def value(self, alpha):
        a, scalar = _check_alpha(alpha)
        if self.p == 0.0:
            return _out(1.0 - a, scalar)
        out = np.empty_like(a)
        left = a <= self.x_star
        right = a >= self.fp_star
        mid = ~left & ~right
        out[left] = self._fp(a[left])
        out[mid] = self.x_star + self.fp_star - a[mid]
        if np.any(right):
            out[right] = self._fp_inverse(a[right])
        return _out(np.clip(out, 0.0, 1.0 - a), scalar)

    def _left_subdiff(self, x):
        ilo, ihi = self.inner.subdiff(x)
        shift = 1.0 - self.p
        return self.p * np.asarray(ilo) - shift, self.p * np.asarray(ihi) - shift

    def subdiff(self, alpha):
        a, scalar = _check_alpha(alpha)
        if self.p == 0.0:
            return IdentityCurve().subdiff(alpha)
        xs, fs = self.x_star, self.fp_star
        has_mid = fs > xs
        lo = np.full_like(a, -1.0)
        hi = np.full_like(a, -1.0)
        left = a < xs
        if np.any(left):
            lo[left], hi[left] = self._left_subdiff(a[left])
        # at the fixed point the right derivative is -1 on the middle segment,
        # otherwise the reciprocal of the left derivative
        lo_star, _ = self._left_subdiff(np.array([xs]))
        lo_star = float(lo_star[0])
        recip_star = 1.0 / lo_star if np.isfinite(lo_star) else 0.0
        at_star = a == xs
        lo[at_star] = lo_star
        hi[at_star] = -1.0 if has_mid else recip_star
        right = a > fs
        if np.any(right):
            mirror = np.minimum(np.asarray(self.value(a[right])), xs)
            mlo, mhi = self._left_subdiff(mirror)
            with np.errstate(divide="ignore"):
                lo[right] = 1.0 / mhi
                hi[right] = np.where(np.isinf(mlo), 0.0, 1.0 / mlo)
        at_fs = (a == fs) & has_mid
        lo[at_fs] = -1.0
        hi[at_fs] = recip_star
        lo = np.where(a == 0.0, -np.inf, lo)
        hi = np.where(a == 1.0, 0.0, hi)
        return _out(lo, scalar), _out(hi, scalar)

    def argslope(self, slope, side="left"):
        c = np.asarray(slope, dtype=float)
        scalar = c.ndim == 0
        c = np.atleast_1d(c)
        if self.p == 0.0:
            return IdentityCurve().argslope(slope, side)
        p = self.p
        res = np.empty_like(c)
        steep = c < -1.0
        if np.any(steep):
            s = (c[steep] + (1.0 - p)) / p
            res[steep] = np.minimum(np.asarray(self.inner.argslope(s, side)), self.x_star)
        at = c == -1.0
        if np.any(at):
            s_left = np.asarray(self.inner.argslope(np.array([-1.0]), "left"))
            left_end = min(float(s_left[0]), self.x_star)
            res[at] = left_end if side == "left" else float(self.value(left_end))
        shallow = c > -1.0
        if np.any(shallow):
            with np.errstate(divide="ignore"):
                recip = np.where(c[shallow] == 0.0, -np.inf, 1.0 / c[shallow])
            other = "right" if side == "left" else "left"
            mirror = np.asarray(self.argslope(recip, other))
            res[shallow] = np.asarray(self.value(mirror))
            if side == "right":
                res[shallow] = np.where(c[shallow] == 0.0, 1.0, res[shallow])
        return _out(res[0] if scalar else res, scalar)

    def inverse(self, beta):
        return self.value(beta)

    def fixed_point(self) -> float:
        # midpoint of the linear piece joining (x*, f_p(x*)) and (f_p(x*), x*)
        return 0.5 * (self.x_star + self.fp_star)

    def __repr__(self) -> str:
        return f"SubsampledCurve({self.inner!r}, p={self.p!r})"


def _lower_hull(points: NDArray[np.float64]) -> NDArray[np.float64]:
    hull: list[tuple[float, float]] = []
    for x, y in points:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            # drop the middle point unless it lies strictly below the chord
            if (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1) <= 0:
                hull.pop()
            else:
                break
        hull.append((float(x), float(y)))
    return np.array(hull)


class TabulatedCurve(TradeoffCurve):
    """Piecewise-linear curve through the lower convex hull of given points."""

    kind = "tabulated"

    def __init__(self, points: ArrayLike, *, symmetric: bool = False):
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
            raise ValueError("points must be an (m, 2) array with m >= 2")
        pts = pts[np.argsort(pts[:, 0], kind="stable")]
        if pts[0, 0] > 0.0 or pts[-1, 0] < 1.0:
            raise ValueError("tabulated alphas must cover [0, 1]")
        pts = pts[(pts[:, 0] >= 0.0) & (pts[:, 0] <= 1.0)]
        # keep the smallest beta per alpha
        _, first = np.unique(pts[:, 0], return_index=True)
        uniq = np.array([[a, pts[pts[:, 0] == a, 1].min()] for a in pts[first, 0]])
        uniq[:, 1] = np.clip(uniq[:, 1], 0.0, 1.0 - uniq[:, 0])
        self.points = _lower_hull(uniq)
        self.alphas = self.points[:, 0]
        self.betas = self.points[:, 1]
        self.slopes = np.minimum(np.diff(self.betas) / np.diff(self.alphas), 0.0)
        self.symmetric = symmetric

    def value(self, alpha):
        a, scalar = _check_alpha(alpha)
        return _out(np.interp(a, self.alphas, self.betas), scalar)

    def subdiff(self, alpha):
        a, scalar = _check_alpha(alpha)
        # vertex j has subdifferential [s_ext[j], s_ext[j + 1]]
        s_ext = np.concatenate([[-np.inf], self.slopes, [0.0]])
        idx = np.searchsorted(self.alphas, a, side="left")
        on_vertex = self.alphas[np.minimum(idx, len(self.alphas) - 1)] == a
        lo = s_ext[idx]
        hi = np.where(on_vertex, s_ext[np.minimum(idx + 1, len(s_ext) - 1)], s_ext[idx])
        return _out(lo, scalar), _out(hi, scalar)

    def argslope(self, slope, side="left"):
        c = np.asarray(slope, dtype=float)
        # right-hand slopes at vertices, the last vertex closes with slope 0
        right_slopes = np.concatenate([self.slopes, [0.0]])
        left_slopes = np.concatenate([[-np.inf], self.slopes])
        if side == "left":
            j = np.searchsorted(right_slopes, c, side="left")
            j = np.minimum(j, len(self.alphas) - 1)
        else:
            j = np.searchsorted(left_slopes, c, side="right") - 1
            j = np.clip(j, 0, len(self.alphas) - 1)
        res = np.asarray(self.alphas[j], dtype=float)
        return _out(res, c.ndim == 0)

    def __repr__(self) -> str:
        return f"TabulatedCurve({len(self.points)} vertices)"


def is_symmetric(f: TradeoffCurve, tol: float = SYMMETRY_TOL, n: int = 101) -> bool:
    """Check ``f(f(alpha)) == alpha`` on a grid wherever ``f(alpha) > 1e-6``."""
    if f.symmetric:
        return True
    a = np.linspace(0.0, 1.0, n)
    b = np.asarray(f.value(a))
    mask = b > 1e-6
    back = np.asarray(f.value(b[mask]))
    return bool(np.all(np.abs(back - a[mask]) <= tol))


# ---------------------------------------------------------------------------
# functional interface


def eval_gdp(mu: float, alpha: ArrayLike):
    """Gaussian tradeoff value ``G_mu(alpha)``."""
    return GaussianCurve(mu).value(alpha)


def eval_epsdelta(eps: float, delta: float, alpha: ArrayLike):
    return EpsDeltaCurve(eps, delta).value(alpha)


def gdp_group(mu: float, k: int) -> float:
    """A mu-GDP mechanism is (k mu)-GDP for groups of size k."""
    if mu < 0:
        raise ValueError("mu must be non-negative")
    if int(k) != k or k < 1:
        raise ValueError(f"group size must be a positive integer, got {k}")
    return float(k * mu)


def mix_point(spec: MixtureSpec, slope: float) -> tuple[float, float]:
    """Mixture point matched at subdifferential value ``slope`` (<= 0)."""
    if slope > 0:
        raise ValueError("slope must be <= 0")
    a, b = MixtureCurve(spec).point_at_slope(np.asarray(float(slope)), "left")
    return float(a), float(b)


def mix_at_alpha(spec: MixtureSpec, alpha: ArrayLike):
    return MixtureCurve(spec).value(alpha)


def cp_apply(f: TradeoffCurve, p: float) -> SubsampledCurve:
    """Subsampling operator ``C_p`` applied to a symmetric tradeoff function."""
    return SubsampledCurve(f, p)


def delta_profile(f: TradeoffCurve, eps: ArrayLike):
    """Privacy profile ``delta(eps) = 1 + f*(-e^eps)`` of a symmetric curve.

    Uses the supporting line of slope ``-e^eps``: with ``alpha_eps`` its point
    of tangency, ``delta = 1 - e^eps alpha_eps - f(alpha_eps)``.
    """
    e = np.asarray(eps, dtype=float)
    if np.any(e < 0):
        raise ValueError("eps must be non-negative")
    a, b = f.point_at_slope(-np.exp(e), "left")
    d = 1.0 - np.exp(e) * a - b
    d = np.clip(d, 0.0, 1.0)
    return float(d) if e.ndim == 0 else d


@dataclass(frozen=True)
class PrivacyProfile:
    """``eps -> delta(eps)``, given as a callable or as a table of pairs."""

    delta_at: Callable[[NDArray[np.float64]], NDArray[np.float64]] | None = None
    table: tuple[tuple[float, float], ...] | None = field(default=None)

    def __post_init__(self):
        if self.delta_at is None and self.table is None:
            raise ValueError("a privacy profile needs delta_at or a table")
        if self.table is not None:
            for e, d in self.table:
                if e < 0 or not 0.0 <= d <= 1.0:
                    raise ValueError(f"invalid (eps, delta) pair ({e}, {d})")

    @classmethod
    def from_curve(cls, f: TradeoffCurve) -> "PrivacyProfile":
        return cls(delta_at=lambda e: delta_profile(f, e))

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[float, float]]) -> "PrivacyProfile":
        return cls(table=tuple((float(e), float(d)) for e, d in pairs))


EPS_GRID = np.concatenate([[0.0], np.logspace(-6, np.log10(50.0), 2048)])
_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def _fed(eps, delta, a):
    e = np.exp(eps)
    return np.maximum(np.maximum(1.0 - delta - e * a, (1.0 - delta - a) / e), 0.0)


def fdp_from_profile(profile: PrivacyProfile, alpha: ArrayLike):
    """Tradeoff value ``sup_eps f_{eps, delta(eps)}(alpha)``.

    Tabulated profiles take the supremum over their pairs. Callable profiles
    are scanned on a log-spaced eps grid and the best grid cell is refined by
    golden-section search.
    """
    a, scalar = _check_alpha(alpha)
    a1 = np.atleast_1d(a)
    if profile.table is not None:
        best = np.zeros_like(a1)
        for e, d in profile.table:
            best = np.maximum(best, _fed(e, d, a1))
        return _out(best[0] if scalar else best, scalar)

    grid = EPS_GRID
    deltas = np.clip(np.asarray(profile.delta_at(grid), dtype=float), 0.0, 1.0)
    vals = _fed(grid[None, :], deltas[None, :], a1[:, None])
    k = np.argmax(vals, axis=1)
    best = vals[np.arange(len(a1)), k]
    lo = grid[np.maximum(k - 1, 0)]
    hi = grid[np.minimum(k + 1, len(grid) - 1)]

    def obj(e):
        d = np.clip(np.asarray(profile.delta_at(e), dtype=float), 0.0, 1.0)
        return _fed(e, d, a1)

    for _ in range(60):
        x1 = hi - _GOLDEN * (hi - lo)
        x2 = lo + _GOLDEN * (hi - lo)
        right = obj(x1) < obj(x2)
        lo = np.where(right, x1, lo)
        hi = np.where(right, hi, x2)
    best = np.maximum(best, obj(0.5 * (lo + hi)))
    best = np.where(a1 >= 1.0, 0.0, best)
    best = np.clip(best, 0.0, 1.0 - a1)
    return _out(best[0] if scalar else best, scalar)


def curve_from_profile(profile: PrivacyProfile, n: int = 501) -> TabulatedCurve:
    a = np.linspace(0.0, 1.0, n)
    return TabulatedCurve(np.column_stack([a, fdp_from_profile(profile, a)]))


def write_curve_csv(path, alpha: ArrayLike, beta: ArrayLike) -> None:
    """Write an ``alpha,beta`` CSV with 10 significant digits."""
    a = np.asarray(alpha, dtype=float)
    b = np.asarray(beta, dtype=float)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["alpha", "beta"])
        for x, y in zip(a, b):
            w.writerow([f"{x:.10g}", f"{y:.10g}"])
