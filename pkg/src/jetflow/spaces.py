"""Grid estimators for Sobolev, Schwartz and ultradifferentiable seminorms.

Every estimate is taken on a truncated box ``[-X, X]^d``. Suprema are
maxima over grid nodes and therefore lower bounds of the true suprema;
ultradifferentiable seminorms are truncated at a derivative order
``K_max``. Reports carry both so that "finite" is never read as an
asymptotic statement.

For vector-valued functions every seminorm is the maximum over
components.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np

from .jets import JetPoly
from .jets import multiindex as mi
from .sequences import WeightSequence

Quadrature = Literal["trapezoid", "simpson", "gauss-legendre"]


@dataclass(frozen=True)
class GridSpec:
    """Tensor grid on ``[-extent, extent]^d`` with a quadrature rule.

    Parameters
    ----------
    d : int
        Spatial dimension.
    extent : float
        Half-width ``X`` of the box.
    n : int
        Points per axis. Simpson needs an odd ``n >= 3``.
    quadrature : {"trapezoid", "simpson", "gauss-legendre"}
    """

    d: int = 1
    extent: float = 8.0
    n: int = 129
    quadrature: Quadrature = "simpson"

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if not self.extent > 0:
            raise ValueError("extent must be positive")
        if self.n < 2:
            raise ValueError("need at least 2 points per axis")
        if self.quadrature == "simpson" and (self.n < 3 or self.n % 2 == 0):
            raise ValueError("simpson needs an odd number of points >= 3")
        if self.quadrature not in ("trapezoid", "simpson", "gauss-legendre"):
            raise ValueError(f"unknown quadrature {self.quadrature!r}")

    @classmethod
    def from_config(cls, cfg: dict) -> "GridSpec":
        return cls(**cfg)

    def to_config(self) -> dict:
        return {"d": self.d, "extent": self.extent, "n": self.n, "quadrature": self.quadrature}

    def axis(self) -> tuple[np.ndarray, np.ndarray]:
        """One-dimensional nodes and weights."""
        X, n = self.extent, self.n
        if self.quadrature == "gauss-legendre":
            s, w = np.polynomial.legendre.leggauss(n)
            return X * s, X * w
        x = np.linspace(-X, X, n)
        h = x[1] - x[0]
        if self.quadrature == "trapezoid":
            w = np.full(n, h)
            w[[0, -1]] = h / 2
        else:
            w = np.full(n, 2 * h / 3)
            w[1::2] = 4 * h / 3
            w[[0, -1]] = h / 3
        return x, w

    @property
    def spacing(self) -> float:
        return 2 * self.extent / (self.n - 1)

    @property
    def size(self) -> int:
        return self.n**self.d

    def points(self) -> np.ndarray:
        """Nodes flattened to shape ``(n^d, d)`` (first axis slowest)."""
        x, _ = self.axis()
        mesh = np.meshgrid(*([x] * self.d), indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=-1)

    def weights(self) -> np.ndarray:
        _, w = self.axis()
        out = w
        for _ in range(self.d - 1):
            out = np.multiply.outer(out, w)
        return out.ravel()

    def on_boundary(self) -> np.ndarray:
        x, _ = self.axis()
        edge = np.zeros(self.n, dtype=bool)
        edge[[0, -1]] = True
        mesh = np.meshgrid(*([edge] * self.d), indexing="ij")
        return np.logical_or.reduce([g.ravel() for g in mesh])

    def refined(self) -> "GridSpec":
        """Same box with the spacing halved."""
        return GridSpec(self.d, self.extent, 2 * self.n - 1, self.quadrature)


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Jets of order ``K`` of a map ``R^d -> R^m`` at every grid node.

    ``closed_form`` is an optional callable accepting arrays or jets (see
    :mod:`jetflow.catalog`); composition and round-trip checks use it to
    evaluate off the grid. ``tail_bound``, when known, bounds the mass the
    truncated box misses.
    """

    grid: GridSpec
    jets: JetPoly
    closed_form: Callable | None = None
    tag: str | None = None
    tail_bound: float | None = None

    def __post_init__(self):
        if self.jets.batch_shape != (self.grid.size,):
            raise ValueError(f"expected jets batched over {self.grid.size} nodes, got {self.jets.batch_shape}")
        if self.jets.dim_in != self.grid.d:
            raise ValueError("jet input dimension differs from grid dimension")

    @classmethod
    def from_closed_form(cls, grid: GridSpec, fn: Callable, order: int, tag: str | None = None,
                         tail_bound: float | None = None) -> "SampledFunction":
        jets = fn(JetPoly.identity(grid.points(), order))
        return cls(grid, jets, fn, tag, tail_bound)

    @property
    def order(self) -> int:
        return self.jets.order

    @property
    def dim_out(self) -> int:
        return self.jets.dim_out

    @property
    def values(self) -> np.ndarray:
        return self.jets.value

    @property
    def points(self) -> np.ndarray:
        return self.jets.basepoint

    def derivative(self, alpha) -> np.ndarray:
        """``d^alpha f`` at all nodes, shape ``(N, m)``."""
        return self.jets.derivative(alpha)

    def to_json(self) -> str:
        return json.dumps(
            {
                "grid": self.grid.to_config(),
                "order": self.order,
                "dim_out": self.dim_out,
                "tag": self.tag,
                "coeffs": self.jets.coeffs.tolist(),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "SampledFunction":
        obj = json.loads(text)
        grid = GridSpec.from_config(obj["grid"])
        coeffs = np.asarray(obj["coeffs"], dtype=float)
        jets = JetPoly(coeffs, grid.points(), int(obj["order"]))
        return cls(grid, jets, None, obj.get("tag"))


def lp_norm(values: np.ndarray, weights: np.ndarray, p: float) -> np.ndarray:
    """Quadrature ``L^p`` norm along axis 0 (``p = inf``: max over nodes)."""
    a = np.abs(values)
    if math.isinf(p):
        return a.max(axis=0) if a.size else np.zeros(a.shape[1:])
    return (np.tensordot(weights, a**p, axes=(0, 0))) ** (1.0 / p)


def _check_order(f: SampledFunction, k: int):
    if k > f.order:
        raise ValueError(f"requested derivative order {k} exceeds jet order {f.order}")


def sobolev_norm(f: SampledFunction, k: int, p: float) -> float:
    """``sum_{|alpha| <= k} ||d^alpha f||_{L^p}``, max over components."""
    _check_order(f, k)
    w = f.grid.weights()
    derivs = f.jets.derivatives()
    total = np.zeros(f.dim_out)
    for i, alpha in enumerate(mi.enumerate_multiindices(f.grid.d, k)):
        total += lp_norm(derivs[:, i, :], w, p)
    return float(total.max())


def schwartz_seminorm(f: SampledFunction, p: int, alpha) -> float:
    """``sup_x (1 + |x|)^p |d^alpha f(x)|`` over grid nodes."""
    _check_order(f, mi.order(alpha))
    r = np.linalg.norm(f.points, axis=-1)
    return float(np.max((1 + r)[:, None] ** p * np.abs(f.derivative(alpha))))


def _alpha_norms(f: SampledFunction, p: float, K_max: int) -> tuple[np.ndarray, np.ndarray]:
    """``||d^alpha f||_{L^p} / |alpha|!`` (max over components) and ``|alpha|``.

    Works from normalized coefficients so that large orders never form
    ``alpha!`` or ``|alpha|!`` separately.
    """
    _check_order(f, K_max)
    d = f.grid.d
    n = mi.n_terms(d, K_max)
    coeffs = f.jets.coeffs[:, :n, :]
    orders = mi.orders_array(d, K_max)
    ratio = np.array(
        [mi.factorial(a) / math.factorial(mi.order(a)) for a in mi.enumerate_multiindices(d, K_max)]
    )
    w = f.grid.weights()
    norms = np.array([lp_norm(coeffs[:, i, :], w, p).max() for i in range(n)])
    return norms * ratio, orders


def ultradiff_seminorm(f: SampledFunction, M: WeightSequence, sigma: float, p: float, K_max: int) -> float:
    """``max_{|alpha| <= K_max} ||d^alpha f||_{L^p} / (sigma^|alpha| |alpha|! M_|alpha|)``."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if K_max > M.N:
        raise ValueError(f"K_max={K_max} exceeds the stored weight sequence length {M.N}")
    norms, orders = _alpha_norms(f, p, K_max)
    denom = np.array([sigma ** int(k) * M[int(k)] for k in orders])
    return float(np.max(norms / denom))


def gelfand_shilov_seminorm(
    f: SampledFunction,
    L: WeightSequence,
    M: WeightSequence,
    sigma: float,
    p_max: int,
    K_max: int,
) -> float:
    """Truncated ``sup (1+|x|)^p |d^alpha f| / (sigma^{p+|alpha|} p! |alpha|! L_p M_|alpha|)``.

    The supremum runs over ``p <= p_max``, ``|alpha| <= K_max`` and grid
    nodes.
    """
    _check_order(f, K_max)
    if p_max > L.N or K_max > M.N:
        raise ValueError("truncation exceeds stored weight sequence length")
    d = f.grid.d
    n = mi.n_terms(d, K_max)
    ratio = np.array(
        [mi.factorial(a) / math.factorial(mi.order(a)) for a in mi.enumerate_multiindices(d, K_max)]
    )
    orders = mi.orders_array(d, K_max)
    # (N, n_terms): |d^alpha f| / |alpha|!, max over components
    deriv = np.abs(f.jets.coeffs[:, :n, :]).max(axis=-1) * ratio
    deriv = deriv / np.array([sigma ** int(k) * M[int(k)] for k in orders])
    r = np.linalg.norm(f.points, axis=-1)
    best = 0.0
    for p in range(p_max + 1):
        weight = np.exp(p * np.log1p(r) - p * math.log(sigma) - math.lgamma(p + 1)) / L[p]
        best = max(best, float(np.max(weight[:, None] * deriv)))
    return best


def sobolev_embedding_order(d: int, p: float) -> int:
    """``k = floor(d/p) + 1`` (``p = inf`` gives 1)."""
    return (0 if math.isinf(p) else int(math.floor(d / p))) + 1


@dataclass(frozen=True)
class EmbeddingCheck:
    k: int
    lhs: float
    rhs_norm: float
    ratio: float


def sobolev_embedding_check(f: SampledFunction, p: float) -> EmbeddingCheck:
    """``||f||_{L^inf}`` against ``||f||_{W^{k,p}}`` with ``k = floor(d/p) + 1``."""
    k = sobolev_embedding_order(f.grid.d, p)
    _check_order(f, k)
    lhs = float(np.abs(f.values).max())
    rhs = sobolev_norm(f, k, p)
    ratio = 0.0 if lhs == 0 else (lhs / rhs if rhs > 0 else math.inf)
    return EmbeddingCheck(k, lhs, rhs, ratio)


def support_radius(f: SampledFunction, tol: float = 1e-12) -> float:
    """Smallest ``R`` with ``|f| <= tol`` at every node outside ``|x| <= R``.

    Returns ``inf`` when the function still exceeds ``tol`` on the boundary
    of the box.
    """
    big = np.abs(f.values).max(axis=-1) > tol
    if not big.any():
        return 0.0
    if np.any(big & f.grid.on_boundary()):
        return math.inf
    return float(np.linalg.norm(f.points[big], axis=-1).max())


def sigma_ladder(kind: Literal["beurling", "roumieu"] = "beurling", steps: int = 6, start: float = 1.0):
    """Descending (Beurling) or ascending (Roumieu) powers-of-two ladder."""
    factor = 0.5 if kind == "beurling" else 2.0
    return [start * factor**i for i in range(steps)]


@dataclass(frozen=True)
class SeminormReport:
    family: str
    params: dict
    value: float
    K_max: int | None
    grid: dict = field(default_factory=dict)

    def row(self) -> dict:
        return {
            "family": self.family,
            "params": json.dumps(self.params, sort_keys=True),
            "value": self.value,
            "K_max": self.K_max,
            "grid": json.dumps(self.grid, sort_keys=True),
        }


def evaluate_seminorm(f: SampledFunction, family: str, **params) -> SeminormReport:
    """Dispatch on ``family`` in ``Wkp``, ``schwartz``, ``BM``, ``WMp``, ``GelfandShilov``.

    ``BM`` is the ``p = inf`` case of ``WMp``.
    """
    p = params.get("p", math.inf)
    p = math.inf if p in ("inf", None) else float(p)
    if family == "Wkp":
        k = int(params["k"])
        value, K = sobolev_norm(f, k, p), k
    elif family == "schwartz":
        alpha = tuple(params["alpha"])
        value, K = schwartz_seminorm(f, int(params["decay_power"]), alpha), mi.order(alpha)
    elif family in ("BM", "WMp"):
        K = int(params.get("K_max", f.order))
        M = _as_sequence(params.get("M"), K)
        pp = math.inf if family == "BM" else p
        value = ultradiff_seminorm(f, M, float(params["sigma"]), pp, K)
    elif family == "GelfandShilov":
        K = int(params.get("K_max", f.order))
        p_max = int(params.get("p_max", 4))
        value = gelfand_shilov_seminorm(
            f,
            _as_sequence(params.get("L"), p_max),
            _as_sequence(params.get("M"), K),
            float(params["sigma"]),
            p_max,
            K,
        )
    else:
        raise ValueError(f"unknown seminorm family {family!r}")
    shown = {k: (v.values if isinstance(v, WeightSequence) else v) for k, v in params.items()}
    return SeminormReport(family, shown, value, K, f.grid.to_config())


def _as_sequence(spec, K: int) -> WeightSequence:
    if spec is None:
        return WeightSequence.constant(max(K, 2))
    if isinstance(spec, WeightSequence):
        return spec
    return WeightSequence.from_config(spec)


def ladder_report(f: SampledFunction, M: WeightSequence, p: float, K_max: int, ladder) -> list[tuple[float, float]]:
    """``(sigma, seminorm)`` for each rung of a sigma ladder."""
    return [(s, ultradiff_seminorm(f, M, s, p, K_max)) for s in ladder]
