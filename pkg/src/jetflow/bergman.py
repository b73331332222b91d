"""Bergman spaces on polystrips and their inclusions into the Sobolev class ``W^{1,p}``.

A polystrip ``S_(r) = {|Im z_j| < r}`` is discretized by a tensor rule: the
real parts follow a :class:`~jetflow.spaces.GridSpec` (Gauss-Legendre on
``[-X, X]^d`` by default) and the imaginary parts Gauss-Legendre on
``(-r, r)^d``.

Two operators connect the spaces:

* extension ``S``: a function with ``||f||^{1,p}_{sigma/(2dr)} < inf`` has
  the holomorphic extension ``F(x + iy) = sum_alpha c_alpha(x) (iy)^alpha``,
  ``c_alpha = d^alpha f / alpha!``. With ``N = ||f||^{1,p}_{sigma/(2dr)}``,
  Minkowski's inequality in ``x`` gives
  ``||F||_{L^p(S_(r))} <= (2r)^{d/p} N / (1 - sigma/2)``.
* restriction ``R``: Cauchy's formula on the lines ``Im z_j = +-y_j`` and
  Young's inequality give, per axis and for ``k >= 1``,
  ``||d^k f||_{L^p} <= K(k) ||F||_{L^p(S_(r))}`` with
  ``K(k) = (k! D_k / (2 pi)) 2^{(p-1)/p} ((kp + 1) / r^{kp+1})^{1/p}`` and
  ``D_k = int (1 + s^2)^{-(k+1)/2} ds``; for ``k = 0`` the disk mean value
  inequality gives ``K(0) = (2 / (pi r))^{1/p}``. Mixed derivatives take the
  product over axes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, special

from .catalog import Profile
from .flow import TimeDependentField, solve_flow
from .jets import JetPoly
from .jets import multiindex as mi
from .spaces import GridSpec, SampledFunction, _alpha_norms, lp_norm


class PreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class Polystrip:
    """Quadrature on ``[-X, X]^d x (-r, r)^d``.

    Parameters
    ----------
    d : int
    r : float
        Half-width of every strip.
    x : GridSpec, optional
        Real-part nodes; defaults to 64 Gauss-Legendre nodes on ``[-8, 8]``
        per axis.
    ny : int
        Gauss-Legendre nodes per imaginary axis.
    """

    d: int = 1
    r: float = 1.0
    x: GridSpec | None = None
    ny: int = 16

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("strip half-width r must be positive")
        if self.x is None:
            object.__setattr__(self, "x", GridSpec(self.d, 8.0, 64, "gauss-legendre"))
        if self.x.d != self.d:
            raise ValueError("x grid dimension differs from d")

    def with_width(self, r: float) -> "Polystrip":
        return Polystrip(self.d, r, self.x, self.ny)

    def y_nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """Imaginary offsets ``(n_y^d, d)`` and their weights."""
        s, w = np.polynomial.legendre.leggauss(self.ny)
        ys, ws = self.r * s, self.r * w
        mesh = np.meshgrid(*([ys] * self.d), indexing="ij")
        Y = np.stack([g.ravel() for g in mesh], axis=-1)
        W = ws
        for _ in range(self.d - 1):
            W = np.multiply.outer(W, ws)
        return Y, W.ravel()

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """Complex nodes ``(N_x, N_y, d)`` and weights ``(N_x, N_y)``."""
        X = self.x.points()
        Y, wy = self.y_nodes()
        Z = X[:, None, :] + 1j * Y[None, :, :]
        return Z, np.outer(self.x.weights(), wy)

    def area(self) -> float:
        return (2 * self.x.extent * 2 * self.r) ** self.d


@dataclass(frozen=True, eq=False)
class BergmanFunction:
    """Holomorphic map on a polystrip given by a complex evaluator.

    ``evaluator(z)`` takes complex points ``(..., d)`` and returns
    ``(..., m)``. ``jets(points, K)``, when given, returns real jets on
    ``R^d`` (used by the restriction instead of contour quadrature).
    """

    strip: Polystrip
    evaluator: Callable[[np.ndarray], np.ndarray]
    jets: Callable[[np.ndarray, int], JetPoly] | None = None
    real_on_reals: bool = True
    tail_bound: float | None = None
    tag: str | None = None

    @classmethod
    def from_profile(cls, strip: Polystrip, profile: Profile) -> "BergmanFunction":
        if not profile.is_entire:
            raise ValueError(f"profile {profile.kind!r} has no holomorphic extension to a strip")
        return cls(strip, profile, profile.jets, True, None, profile.kind)

    def __call__(self, z) -> np.ndarray:
        return np.asarray(self.evaluator(np.asarray(z, dtype=complex)))

    def values_on(self, strip: Polystrip | None = None) -> np.ndarray:
        """Values at the strip nodes, shape ``(N_x, N_y, m)``."""
        Z, _ = (strip or self.strip).nodes()
        return self(Z)

    def edge_sup(self, strip: Polystrip) -> float:
        """``max |F|`` on the vertical sides ``Re z_j = +-X`` at the ``y`` nodes."""
        Y, _ = strip.y_nodes()
        X = strip.x.extent
        worst = 0.0
        for j in range(strip.d):
            for sign in (-1.0, 1.0):
                Z = np.zeros_like(Y, dtype=complex) + 1j * Y
                Z[:, j] = sign * X + 1j * Y[:, j]
                worst = max(worst, float(np.abs(self(Z)).max()))
        return worst

    def with_strip(self, strip: Polystrip) -> "BergmanFunction":
        return BergmanFunction(strip, self.evaluator, self.jets, self.real_on_reals, self.tail_bound, self.tag)


def zero_function(strip: Polystrip, m: int = 1) -> BergmanFunction:
    return BergmanFunction.from_profile(strip, Profile("zero", strip.d, m))


@dataclass(frozen=True)
class BergmanNorm:
    value: float
    edge: float
    tail_warning: bool


def bergman_norm_report(F: BergmanFunction, p: float, strip: Polystrip | None = None,
                        tol: float = 1e-10) -> BergmanNorm:
    """``||F||_{L^p}`` on the truncated strip plus a truncation diagnostic.

    ``edge`` is ``max |F|`` on the vertical sides ``Re z_j = +-X``; without
    a catalog tail bound a value above ``tol`` raises the warning flag.
    """
    if p < 1:
        raise ValueError("p must be in [1, inf]")
    strip = strip or F.strip
    vals = np.abs(F.values_on(strip))
    _, W = strip.nodes()
    if math.isinf(p):
        value = float(vals.max()) if vals.size else 0.0
    else:
        value = float(np.max(np.einsum("xy,xym->m", W, vals**p) ** (1 / p)))
    edge = F.edge_sup(strip)
    warn = F.tail_bound is None and edge > tol
    return BergmanNorm(value, edge, bool(warn))


def bergman_norm(F: BergmanFunction, p: float, strip: Polystrip | None = None) -> float:
    """``L^p`` norm over ``[-X, X]^d x (-r, r)^d`` (``p = inf``: node maximum)."""
    return bergman_norm_report(F, p, strip).value


def real_defect(F: BergmanFunction) -> float:
    """``max |Im F|`` on the real nodes; tiny for members of the real space."""
    return float(np.abs(np.imag(F(F.strip.x.points().astype(complex)))).max())


def width_ladder(F: BergmanFunction, p: float, steps: int = 4) -> list[tuple[float, float]]:
    """Norms on ``S_(r), S_(r/2), S_(r/4), ...`` for ladder tables."""
    r = F.strip.r
    return [(r / 2**i, bergman_norm(F, p, F.strip.with_width(r / 2**i))) for i in range(steps)]


# -- interior sup bound ----------------------------------------------------------


@dataclass(frozen=True)
class InteriorBound:
    sup_inner: float
    norm_outer: float
    ratio: float
    C_mean_value: float

    @property
    def holds(self) -> bool:
        return self.ratio <= self.C_mean_value * (1 + 1e-9)


def interior_sup_bound(F: BergmanFunction, l: float, p: float) -> InteriorBound:
    """``sup_{S_(l)} |F|`` against ``||F||_{L^p(S_(r))}``.

    Every point of ``S_(l)`` is the center of a polydisk of radius ``r - l``
    inside ``S_(r)``, so the mean value inequality bounds the ratio by
    ``(pi (r - l)^2)^{-d/p}``.
    """
    r = F.strip.r
    if not 0 < l < r:
        raise ValueError("need 0 < l < r")
    inner = F.strip.with_width(l)
    Z, _ = inner.nodes()
    Y, _ = inner.y_nodes()
    # include the boundary lines Im z_j = +-l, where the supremum is attained
    edge = np.concatenate([Y, np.full((1, inner.d), l), np.full((1, inner.d), -l)])
    Z = inner.x.points()[:, None, :] + 1j * edge[None, :, :]
    sup = float(np.abs(F(Z)).max())
    norm = bergman_norm(F, p)
    ratio = sup / norm if norm > 0 else 0.0
    C = 1.0 if math.isinf(p) else (math.pi * (r - l) ** 2) ** (-F.strip.d / p)
    return InteriorBound(sup, norm, ratio, C)


def interior_sweep(F: BergmanFunction, ls: Sequence[float], p: float) -> tuple[list[InteriorBound], float]:
    """Bounds for several inner widths and the log-log slope of the ratio in ``r - l``."""
    rows = [interior_sup_bound(F, l, p) for l in ls]
    gaps = np.log([F.strip.r - l for l in ls])
    slope = float(np.polyfit(gaps, np.log([b.ratio for b in rows]), 1)[0])
    return rows, slope


# -- extension -----------------------------------------------------------------


def one_seminorm(f: SampledFunction, tau: float, p: float, K_max: int | None = None) -> tuple[float, bool]:
    """``max_{|alpha| <= K_max} ||d^alpha f||_{L^p} / (tau^|alpha| |alpha|!)`` and a settled flag.

    ``settled`` is True when the largest per-order value sits before the
    last quarter of the orders and the tail is two decades below it, so
    that raising ``K_max`` would not change the maximum.
    """
    K = f.order if K_max is None else K_max
    norms, orders = _alpha_norms(f, p, K)
    scaled = norms / tau ** orders.astype(float)
    per_order = np.array([scaled[orders == k].max() for k in range(K + 1)])
    cut = K + 1 - max(2, (K + 1) // 4)
    settled = int(np.argmax(per_order)) < cut and per_order[cut:].max() <= 1e-2 * per_order.max()
    return float(scaled.max()), bool(settled or K == 0)


def _pointwise_seminorm(f: SampledFunction, tau: float) -> float:
    """``max_x max_alpha |c_alpha(x)| alpha! / (|alpha|! tau^|alpha|)``."""
    d, K = f.grid.d, f.order
    alphas = mi.enumerate_multiindices(d, K)
    ratio = np.array([mi.factorial(a) / math.factorial(mi.order(a)) for a in alphas])
    orders = mi.orders_array(d, K).astype(float)
    return float((np.abs(f.jets.coeffs).max(axis=(0, 2)) * ratio / tau**orders).max())


@dataclass(frozen=True, eq=False)
class Extension(BergmanFunction):
    """Truncated Taylor series ``sum_{|alpha| <= K} c_alpha(x) (iy)^alpha``.

    ``source`` supplies the coefficients ``c_alpha``: at its grid nodes from
    the stored jets, elsewhere from its closed form.
    """

    source: SampledFunction | None = None
    K: int = 12
    tau: float = 1.0
    majorant: float = 0.0

    def coefficients_at(self, x: np.ndarray) -> JetPoly:
        f = self.source
        flat = x.reshape(-1, self.strip.d)
        grid_pts = f.points
        if flat.shape == grid_pts.shape and np.array_equal(flat, grid_pts):
            return f.jets.truncate(self.K).reshape(*x.shape[:-1])
        if f.closed_form is None:
            raise ValueError("off-grid extension needs a closed form for the coefficients")
        return f.closed_form(JetPoly.identity(flat, self.K)).reshape(*x.shape[:-1])

    def truncation_bound(self, y) -> float:
        """Tail ``N q^{K+1} / (1 - q)`` with ``q = tau sum_j |y_j|``."""
        y = np.atleast_2d(np.abs(np.asarray(y, dtype=float)))
        if np.any(y >= self.strip.r):
            raise ValueError(f"|Im z| must stay below the strip width {self.strip.r}")
        q = float(self.tau * y.sum(axis=-1).max())
        if q >= 1:
            raise PreconditionError("seminorm precondition violated: majorant ratio q >= 1")
        return self.majorant * q ** (self.K + 1) / (1 - q)

    def _eval(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        self.truncation_bound(np.imag(z).reshape(-1, self.strip.d))
        J = self.coefficients_at(np.real(z))
        return J.evaluate(1j * np.imag(z))

    def edge_sup(self, strip: Polystrip) -> float:
        """``max |F|`` over the outermost real nodes of the source grid."""
        if strip.x != self.source.grid:
            return super().edge_sup(strip)
        vals = np.abs(self.values_on(strip))
        edge = np.abs(self.source.points).max(axis=-1) >= np.abs(self.source.points).max() - 1e-12
        return float(vals[edge].max())

    def values_on(self, strip: Polystrip | None = None) -> np.ndarray:
        strip = strip or self.strip
        Y, _ = strip.y_nodes()
        self.truncation_bound(Y)
        if strip.x == self.source.grid:
            J = self.source.jets.truncate(self.K)
            return np.stack([J.evaluate(np.broadcast_to(1j * y, J.basepoint.shape)) for y in Y], axis=1)
        Z, _ = strip.nodes()
        return self._eval(Z)


def extend_S(f: SampledFunction, r: float, sigma: float, K: int = 12, ny: int = 16) -> Extension:
    """Holomorphic extension of ``f`` to ``S_(r)`` by its Taylor series in ``Im z``.

    Parameters
    ----------
    f : SampledFunction
        Jets of order ``>= K`` on a grid; the pointwise majorant is taken
        over all stored orders.
    r : float
        Strip half-width.
    sigma : float
        Seminorm parameter in ``(0, 1)``; the series converges
        geometrically with ratio at most ``sigma``.

    Raises
    ------
    PreconditionError
        If ``sigma`` is outside ``(0, 1)`` or the majorant is not finite.
    """
    if not 0 < sigma < 1:
        raise PreconditionError("seminorm precondition violated: sigma must lie in (0, 1)")
    if f.order < K:
        raise ValueError(f"f carries jets of order {f.order} < K = {K}")
    d = f.grid.d
    tau = sigma / (d * r)
    N = _pointwise_seminorm(f, tau)
    if not math.isfinite(N):
        raise PreconditionError("seminorm precondition violated: majorant diverges")
    strip = Polystrip(d, r, f.grid, ny)
    ext = Extension(strip, None, None, True, None, "extension", f, K, tau, N)
    object.__setattr__(ext, "evaluator", ext._eval)
    return ext


def extension_constant(r: float, sigma: float, p: float, d: int = 1) -> float:
    """``(2r)^{d/p} / (1 - sigma/2)``: bound on ``||S f||_{A^p} / ||f||^{1,p}_{sigma/(2dr)}``."""
    return (2 * r) ** (0 if math.isinf(p) else d / p) / (1 - sigma / 2)


# -- restriction -----------------------------------------------------------------


def _D(k: int) -> float:
    """``int_R (1 + s^2)^{-(k+1)/2} ds`` for ``k >= 1``."""
    return math.sqrt(math.pi) * math.exp(special.gammaln(k / 2) - special.gammaln((k + 1) / 2))


def _log_axis_constant(k: int, r: float, p: float) -> float:
    if k == 0:
        return 0.0 if math.isinf(p) else math.log(2 / (math.pi * r)) / p
    log_kd = special.gammaln(k + 1) + math.log(_D(k)) - math.log(2 * math.pi)
    if math.isinf(p):
        return log_kd + math.log(2) - k * math.log(r)
    return log_kd + (p - 1) / p * math.log(2) + (math.log(k * p + 1) - (k * p + 1) * math.log(r)) / p


def _axis_constant(k: int, r: float, p: float) -> float:
    return math.exp(_log_axis_constant(k, r, p))


def restriction_bound(alpha, r: float, p: float) -> float:
    """Product over axes of the per-axis Cauchy constants."""
    return float(np.prod([_axis_constant(int(a), r, p) for a in alpha]))


def restriction_constant(r: float, p: float, rho: float, d: int = 1, K_scan: int = 400) -> float:
    """``C_5 = sup_alpha B(alpha) / ((rho/r)^|alpha| |alpha|!)``.

    The quotient is a product of per-axis factors times the multinomial
    weight ``alpha! / |alpha|! <= 1``, so ``(sup_k g(k))^d`` bounds it, with
    ``g(k) = K(k) / ((rho/r)^k k!)`` scanned up to ``K_scan``.
    """
    if not rho > 1:
        raise ValueError("rho must exceed 1")
    best = max(_log_axis_constant(k, r, p) - k * math.log(rho / r) - special.gammaln(k + 1)
               for k in range(K_scan + 1))
    return math.exp(d * best)


def cauchy_derivatives(F: BergmanFunction, points: np.ndarray, K: int, radius: float | None = None,
                       n: int = 64) -> JetPoly:
    """Normalized Taylor coefficients by the trapezoid rule on circles of ``radius``.

    Uses ``c_alpha = (2 pi i)^{-d} oint F(zeta) / (zeta - x)^{alpha + 1} dzeta``,
    one circle per axis, accurate to about ``(radius / r)^n``.
    """
    d = F.strip.d
    radius = F.strip.r / 2 if radius is None else radius
    theta = 2 * np.pi * np.arange(n) / n
    w = radius * np.exp(1j * theta)
    mesh = np.meshgrid(*([np.arange(n)] * d), indexing="ij")
    idx = np.stack([g.ravel() for g in mesh], axis=-1)
    offsets = w[idx]
    vals = F(points[:, None, :] + offsets[None, :, :])
    alphas = np.array(mi.enumerate_multiindices(d, K))
    inv = w[None, :] ** (-np.arange(K + 1)[:, None])
    mono = np.ones((len(alphas), len(offsets)), dtype=complex)
    for j in range(d):
        mono *= inv[alphas[:, j]][:, idx[:, j]]
    coeffs = np.einsum("at,ptm->pam", mono, vals) / len(offsets)
    if F.real_on_reals:
        coeffs = coeffs.real
    return JetPoly(coeffs, points, K)


@dataclass(frozen=True)
class RestrictionRow:
    alpha: tuple[int, ...]
    norm: float
    bound: float
    weighted: float

    @property
    def holds(self) -> bool:
        return self.norm <= self.bound * (1 + 1e-9)


@dataclass(frozen=True)
class Restriction:
    f: SampledFunction
    F_norm: float
    seminorm: float
    C5: float
    rows: list[RestrictionRow] = field(default_factory=list)

    @property
    def C5_fit(self) -> float:
        return max((r.weighted for r in self.rows), default=0.0)

    @property
    def holds(self) -> bool:
        return all(r.holds for r in self.rows) and self.C5_fit <= self.C5 * (1 + 1e-9)


def restrict_R(F: BergmanFunction, p: float, rho: float, K_max: int, contour: bool = False) -> Restriction:
    """Restriction to ``R^d`` with derivative norms checked against the Cauchy bounds.

    Each row compares ``||d^alpha f||_{L^p}`` with ``B(alpha) ||F||_{A^p}``
    and records ``||d^alpha f||_{L^p} / ((rho/r)^|alpha| |alpha|! ||F||_{A^p})``,
    whose maximum is the fitted ``C_5``.
    """
    if not rho > 1:
        raise ValueError("rho must exceed 1")
    strip = F.strip
    pts = strip.x.points()
    if F.jets is not None and not contour:
        J = F.jets(pts, K_max)
    else:
        # values are the restriction itself; only derivatives need contours
        J = cauchy_derivatives(F, pts, K_max)
        on_axis = F(pts.astype(complex))
        coeffs = J.coeffs.copy()
        coeffs[:, 0, :] = on_axis.real if F.real_on_reals else on_axis
        J = JetPoly(coeffs, pts, K_max)
    f = SampledFunction(strip.x, J, tag="restriction")
    norm_F = bergman_norm(F, p)
    d, r = strip.d, strip.r
    w = strip.x.weights()
    derivs = J.derivatives()
    rows = []
    for i, alpha in enumerate(mi.enumerate_multiindices(d, K_max)):
        n = float(lp_norm(derivs[:, i, :], w, p).max())
        k = mi.order(alpha)
        scale = math.exp(k * math.log(rho / r) + special.gammaln(k + 1))
        weighted = n / (scale * norm_F) if norm_F > 0 else 0.0
        rows.append(RestrictionRow(tuple(alpha), n, restriction_bound(alpha, r, p) * norm_F, weighted))
    semi = max((r_.norm / math.exp(mi.order(r_.alpha) * math.log(rho / r) + special.gammaln(mi.order(r_.alpha) + 1))
                for r_ in rows), default=0.0)
    return Restriction(f, norm_F, semi, restriction_constant(r, p, rho, d), rows)


# -- Cauchy integral constant ------------------------------------------------------


@dataclass(frozen=True)
class CauchyIntegral:
    value: float
    D: float
    bound: float

    @property
    def holds(self) -> bool:
        return self.value <= self.bound * (1 + 1e-9)


def cauchy_integral_constant(alpha, y) -> CauchyIntegral:
    """``int_{R^d} prod_j |x_j + i y_j|^{-(alpha_j + 1)} dx`` by adaptive quadrature.

    The integral factorizes over axes. ``D = prod_j D_{alpha_j}`` with
    ``D_k = int (1 + s^2)^{-(k+1)/2} ds`` is the constant that the
    substitution ``s = x / y`` produces, so ``value <= D prod |y_j|^{-alpha_j}``
    holds with equality.
    """
    alpha = tuple(int(a) for a in alpha)
    y = np.broadcast_to(np.asarray(y, dtype=float), (len(alpha),))
    if any(a < 1 for a in alpha):
        raise ValueError("every alpha_j must be >= 1")
    if np.any(y == 0):
        raise ValueError("every y_j must be nonzero")
    value = 1.0
    for a, yj in zip(alpha, y):
        g = lambda x, a=a, yj=yj: (x * x + yj * yj) ** (-(a + 1) / 2)
        v, _ = integrate.quad(g, -np.inf, np.inf, epsabs=1e-14, epsrel=1e-13)
        value *= v
    D = float(np.prod([_D(a) for a in alpha]))
    bound = D / float(np.prod(np.abs(y) ** np.array(alpha)))
    return CauchyIntegral(value, D, bound)


# -- inclusion verification ---------------------------------------------------------


@dataclass(frozen=True)
class InclusionRow:
    tag: str
    seminorm_S: float
    norm_SF: float
    ratio_S: float
    norm_F: float
    seminorm_R: float
    ratio_R: float
    settled_S: bool
    settled_R: bool

    def row(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class InclusionReport:
    rows: list[InclusionRow]
    C_S: float
    C_R: float

    @property
    def max_ratio_S(self) -> float:
        return max((r.ratio_S for r in self.rows), default=0.0)

    @property
    def max_ratio_R(self) -> float:
        return max((r.ratio_R for r in self.rows), default=0.0)

    @property
    def bounded(self) -> bool:
        return self.max_ratio_S <= self.C_S and self.max_ratio_R <= self.C_R


def gaussian_corpus(widths: Sequence[float] = (0.6, 0.8, 1.0, 1.4, 2.0), d: int = 1) -> list[Profile]:
    return [Profile("gaussian", d, 1, {"width": w}) for w in widths]


def inclusion_verify(corpus: Sequence[Profile], r: float, p: float, sigma: float, rho: float,
                     K_max: int = 60, strip: Polystrip | None = None) -> InclusionReport:
    """Both inclusion ratios for every entire profile in ``corpus``.

    ``ratio_S = ||S f||_{A^p(S_(r))} / ||f||^{1,p}_{sigma/(2dr)}`` with the
    extension evaluated in closed form, and
    ``ratio_R = ||R F||^{1,p}_{rho/r} / ||F||_{A^p(S_(r))}``. Seminorms are
    truncated at ``K_max`` and flagged when the truncation has not settled.
    Truncation can only lower a seminorm, so an unsettled ``ratio_S``
    overestimates the true ratio while an unsettled ``ratio_R``
    underestimates it.
    """
    if not 0 < sigma < 1 < rho:
        raise ValueError("need 0 < sigma < 1 < rho")
    rows = []
    for prof in corpus:
        d = prof.d
        st = strip or Polystrip(d, r)
        st = st.with_width(r)
        F = BergmanFunction.from_profile(st, prof)
        f = SampledFunction(st.x, prof.jets(st.x.points(), K_max))
        semi_S, settled_S = one_seminorm(f, sigma / (2 * d * r), p)
        norm_F = bergman_norm(F, p)
        semi_R, settled_R = one_seminorm(f, rho / r, p)
        rows.append(InclusionRow(
            prof.kind if "width" not in prof.params else f"{prof.kind}(w={prof.params['width']:g})",
            semi_S, norm_F, norm_F / semi_S if semi_S > 0 else 0.0,
            norm_F, semi_R, semi_R / norm_F if norm_F > 0 else 0.0,
            settled_S, settled_R,
        ))
    d = corpus[0].d if corpus else 1
    return InclusionReport(rows, extension_constant(r, sigma, p, d), restriction_constant(r, p, rho, d))


# -- ODE closedness ------------------------------------------------------------------


@dataclass(frozen=True)
class ClosednessRow:
    t: float
    norm: float
    tail: float


@dataclass(frozen=True)
class ClosednessReport:
    rows: list[ClosednessRow]
    steps: list[tuple[int, float]]
    r_prime: float
    p: float

    @property
    def finite(self) -> bool:
        return all(math.isfinite(r.norm) for r in self.rows)

    @property
    def max_tail(self) -> float:
        """Largest truncation bound of the extensions; large values mean the strip is too wide."""
        return max(r.tail for r in self.rows)

    @property
    def shrinking(self) -> bool:
        diffs = [v for _, v in self.steps]
        return all(b <= a for a, b in zip(diffs, diffs[1:]))


def ode_closedness_demo(u: TimeDependentField, r: float = 1.0, p: float = 2.0, *, sigma: float = 0.5,
                        K: int = 12, grid: GridSpec | None = None, levels: Sequence[int] = (2, 4, 8, 16),
                        ny: int = 8, **solver_kw) -> ClosednessReport:
    """Extend ``phi_u(t)`` to ``S_(r/2)`` along the flow and watch its Bergman norm.

    The flow carries jets of order ``K``; at each node of the finest time
    partition ``phi_u(t)`` is extended by :func:`extend_S` with width
    ``r' = r/2``. ``steps`` lists, for each partition size ``n``, the
    largest ``||S phi(t_{i+1}) - S phi(t_i)||_{A^p(S_(r'))}`` over
    consecutive nodes.
    """
    grid = grid or GridSpec(1, 6.0, 61, "gauss-legendre")
    r_prime = r / 2
    pts = grid.points()
    traj = solve_flow(u, pts, K, **solver_kw)
    finest = max(levels)
    times = np.linspace(0.0, traj.t_end, finest + 1)
    strip = Polystrip(grid.d, r_prime, grid, ny)
    Y, W_y = strip.y_nodes()
    W = np.outer(grid.weights(), W_y)
    samples, rows = {}, []
    for t in times:
        J = traj.jets(t) - JetPoly.identity(pts, K)
        f = SampledFunction(grid, J)
        ext = extend_S(f, r_prime, sigma, K, ny)
        vals = ext.values_on(strip)
        samples[float(t)] = vals
        rows.append(ClosednessRow(float(t), _lp_strip(vals, W, p), ext.truncation_bound(Y)))
    steps = []
    for n in sorted(levels):
        ts = times[:: finest // n]
        worst = max(_lp_strip(samples[float(b)] - samples[float(a)], W, p) for a, b in zip(ts, ts[1:]))
        steps.append((n, worst))
    return ClosednessReport(rows, steps, r_prime, p)


def _lp_strip(vals: np.ndarray, W: np.ndarray, p: float) -> float:
    a = np.abs(vals)
    if math.isinf(p):
        return float(a.max())
    return float(np.max(np.einsum("xy,xym->m", W, a**p) ** (1 / p)))
