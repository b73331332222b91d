"""Truncated Taylor jets of maps ``R^d -> R^m``.

A :class:`JetPoly` stores normalized coefficients ``d^alpha f(x0) / alpha!``
for every multi-index of order at most ``K``. Coefficient arrays carry
arbitrary leading batch axes so that one object can hold the jets of a
map at every node of a grid; all arithmetic is vectorized over them.

Elementary numpy ufuncs (``np.exp``, ``np.sin``, ...) act on jets, so a
closed form written against numpy evaluates to values on arrays and to
jets on :class:`JetPoly` inputs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import multiindex as mi

BASEPOINT_RTOL = 1e-9


class JetMismatchError(ValueError):
    """Raised when two jets cannot be combined (dims, orders, basepoints)."""


@dataclass(frozen=True, eq=False)
class JetPoly:
    """Normalized Taylor coefficients of order ``<= order`` at ``basepoint``.

    Parameters
    ----------
    coeffs : ndarray, shape ``(*batch, n_terms, m)``
        ``coeffs[..., i, j]`` is ``d^alpha f_j / alpha!`` for the ``i``-th
        multi-index in graded-lex order.
    basepoint : ndarray, shape ``(*batch, d)``
    order : int
    """

    coeffs: np.ndarray
    basepoint: np.ndarray
    order: int

    __array_priority__ = 100

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs)
        if not np.iscomplexobj(coeffs):
            coeffs = coeffs.astype(float, copy=False)
        base = np.asarray(self.basepoint, dtype=float)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "basepoint", base)
        if base.ndim < 1 or coeffs.ndim < 2:
            raise JetMismatchError("coeffs need shape (*batch, n_terms, m)")
        d = base.shape[-1]
        if coeffs.shape[-2] != mi.n_terms(d, self.order):
            raise JetMismatchError(
                f"expected {mi.n_terms(d, self.order)} coefficients for d={d}, "
                f"K={self.order}, got {coeffs.shape[-2]}"
            )
        if coeffs.shape[:-2] != base.shape[:-1]:
            raise JetMismatchError(
                f"batch shapes differ: coeffs {coeffs.shape[:-2]} vs basepoint {base.shape[:-1]}"
            )
        if not np.all(np.isfinite(coeffs)):
            raise FloatingPointError("jet coefficients must be finite")

    # -- construction -----------------------------------------------------

    @classmethod
    def identity(cls, points, order: int) -> "JetPoly":
        """Jet of ``x -> x`` at each of ``points`` (shape ``(*batch, d)``)."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 0:
            pts = pts[None]
        d = pts.shape[-1]
        coeffs = np.zeros(pts.shape[:-1] + (mi.n_terms(d, order), d))
        coeffs[..., 0, :] = pts
        if order >= 1:
            for i in range(d):
                coeffs[..., 1 + i, i] = 1.0
        return cls(coeffs, pts, order)

    @classmethod
    def constant(cls, value, basepoint, order: int) -> "JetPoly":
        base = np.asarray(basepoint, dtype=float)
        d = base.shape[-1]
        value = np.asarray(value)
        value = np.broadcast_to(value, base.shape[:-1] + value.shape[-1:]) if value.ndim else (
            np.broadcast_to(value, base.shape[:-1] + (1,))
        )
        coeffs = np.zeros(base.shape[:-1] + (mi.n_terms(d, order), value.shape[-1]), dtype=value.dtype)
        coeffs[..., 0, :] = value
        return cls(coeffs, base, order)

    @classmethod
    def from_derivatives(cls, derivs, basepoint, order: int) -> "JetPoly":
        """Build from raw partial derivatives ``d^alpha f`` (not normalized)."""
        base = np.asarray(basepoint, dtype=float)
        fac = mi.factorials_array(base.shape[-1], order)
        return cls(np.asarray(derivs) / fac[:, None], base, order)

    @classmethod
    def stack(cls, jets: Sequence["JetPoly"]) -> "JetPoly":
        """Concatenate components of jets sharing one basepoint."""
        first = jets[0]
        for j in jets[1:]:
            first._check_compatible(j)
        return cls(np.concatenate([j.coeffs for j in jets], axis=-1), first.basepoint, first.order)

    # -- basic accessors --------------------------------------------------

    @property
    def dim_in(self) -> int:
        return self.basepoint.shape[-1]

    @property
    def dim_out(self) -> int:
        return self.coeffs.shape[-1]

    @property
    def batch_shape(self) -> tuple[int, ...]:
        return self.basepoint.shape[:-1]

    @property
    def value(self) -> np.ndarray:
        return self.coeffs[..., 0, :]

    @property
    def multiindices(self) -> list[mi.MultiIndex]:
        return mi.enumerate_multiindices(self.dim_in, self.order)

    def coefficient(self, alpha) -> np.ndarray:
        return self.coeffs[..., mi.index_map(self.dim_in, self.order)[tuple(alpha)], :]

    def derivative(self, alpha) -> np.ndarray:
        """Raw partial derivative ``d^alpha f`` at the basepoint."""
        return self.coefficient(alpha) * mi.factorial(alpha)

    def derivatives(self) -> np.ndarray:
        return self.coeffs * mi.factorials_array(self.dim_in, self.order)[:, None]

    def jacobian(self) -> np.ndarray:
        """First derivative matrix, shape ``(*batch, m, d)``."""
        if self.order < 1:
            raise ValueError("jacobian needs order >= 1")
        return np.swapaxes(self.coeffs[..., 1 : 1 + self.dim_in, :], -1, -2)

    def component(self, j: int) -> "JetPoly":
        return JetPoly(self.coeffs[..., j : j + 1], self.basepoint, self.order)

    def components(self) -> list["JetPoly"]:
        return [self.component(j) for j in range(self.dim_out)]

    def truncate(self, order: int) -> "JetPoly":
        if order > self.order:
            raise ValueError(f"cannot raise order {self.order} to {order}")
        keep = mi.n_terms(self.dim_in, order)
        return JetPoly(self.coeffs[..., :keep, :], self.basepoint, order)

    def __getitem__(self, idx) -> "JetPoly":
        if not isinstance(idx, tuple):
            idx = (idx,)
        if len(idx) > len(self.batch_shape):
            raise IndexError("jet indexing only addresses batch axes")
        return JetPoly(self.coeffs[idx], self.basepoint[idx], self.order)

    def reshape(self, *shape) -> "JetPoly":
        if len(shape) == 1 and isinstance(shape[0], tuple):
            shape = shape[0]
        return JetPoly(
            self.coeffs.reshape(shape + self.coeffs.shape[-2:]),
            self.basepoint.reshape(shape + (self.dim_in,)),
            self.order,
        )

    def rebase(self, basepoint) -> "JetPoly":
        """Same coefficients attached to another basepoint (no re-expansion)."""
        return JetPoly(self.coeffs, np.broadcast_to(basepoint, self.basepoint.shape), self.order)

    def evaluate(self, h) -> np.ndarray:
        """Evaluate the Taylor polynomial at offsets ``h`` from the basepoint.

        ``h`` may be complex; its shape is ``(*batch, d)``.
        """
        h = np.asarray(h)
        d, K = self.dim_in, self.order
        powers = h[..., :, None] ** np.arange(K + 1)
        mono = np.ones(h.shape[:-1] + (mi.n_terms(d, K),), dtype=powers.dtype)
        alphas = np.array(mi.enumerate_multiindices(d, K))
        for i in range(d):
            mono = mono * powers[..., i, alphas[:, i]]
        return np.einsum("...t,...tm->...m", mono, self.coeffs)

    # -- arithmetic -------------------------------------------------------

    def _check_compatible(self, other: "JetPoly"):
        if self.dim_in != other.dim_in:
            raise JetMismatchError(f"dim_in differs: {self.dim_in} vs {other.dim_in}")
        if self.order != other.order:
            raise JetMismatchError(f"order differs: {self.order} vs {other.order}")
        a, b = np.broadcast_arrays(self.basepoint, other.basepoint)
        if not np.allclose(a, b, rtol=BASEPOINT_RTOL, atol=BASEPOINT_RTOL):
            raise JetMismatchError("basepoints differ")

    def _scalar_shape(self, other) -> np.ndarray:
        a = np.asarray(other)
        if a.ndim == 0:
            return a
        # per-batch scalar
        return a.reshape(a.shape + (1, 1))

    def __neg__(self):
        return JetPoly(-self.coeffs, self.basepoint, self.order)

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, JetPoly):
            self._check_compatible(other)
            coeffs, base = _broadcast_coeffs(self, other)
            return JetPoly(coeffs[0] + coeffs[1], base, self.order)
        a = np.asarray(other)
        batch = np.broadcast_shapes(self.batch_shape, a.shape)
        coeffs = np.broadcast_to(self.coeffs, batch + self.coeffs.shape[-2:])
        coeffs = coeffs.astype(np.result_type(coeffs, a))
        coeffs[..., 0, :] += a[..., None]
        base = np.broadcast_to(self.basepoint, batch + (self.dim_in,))
        return JetPoly(coeffs, base, self.order)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, JetPoly):
            return jet_mul(self, other)
        coeffs = self.coeffs * self._scalar_shape(other)
        base = np.broadcast_to(self.basepoint, coeffs.shape[:-2] + (self.dim_in,))
        return JetPoly(coeffs, base, self.order)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, JetPoly):
            return jet_mul(self, other.reciprocal())
        return self * (1.0 / np.asarray(other))

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, n):
        if isinstance(n, (int, np.integer)) and n >= 0:
            result = JetPoly.constant(np.ones(self.dim_out), self.basepoint, self.order)
            base, k = self, int(n)
            while k:
                if k & 1:
                    result = result * base
                k >>= 1
                if k:
                    base = base * base
            return result
        return self._apply(_series_power(self.value, float(n), self.order))

    # -- elementary functions ---------------------------------------------

    def _apply(self, series: np.ndarray) -> "JetPoly":
        """Compose the univariate series ``series[..., k]`` with each component.

        ``series`` has shape ``(*batch, m, K+1)`` and holds the Taylor
        coefficients of the outer function at this jet's value.
        """
        h = JetPoly(self.coeffs.copy(), self.basepoint, self.order)
        h.coeffs[..., 0, :] = 0.0
        K = self.order
        coeffs = np.zeros(self.coeffs.shape, dtype=np.result_type(series, self.coeffs))
        coeffs[..., 0, :] = series[..., K]
        out = JetPoly(coeffs, self.basepoint, K)
        for k in range(K - 1, -1, -1):
            out = out * h
            c = out.coeffs.copy()
            c[..., 0, :] += series[..., k]
            out = JetPoly(c, self.basepoint, K)
        return out

    def exp(self):
        a = self.value
        k = np.arange(self.order + 1)
        fact = np.array([math.factorial(i) for i in k], dtype=float)
        return self._apply(np.exp(a)[..., None] / fact)

    def sin(self):
        a = self.value[..., None]
        k = np.arange(self.order + 1)
        fact = np.array([math.factorial(i) for i in k], dtype=float)
        return self._apply(np.sin(a + k * np.pi / 2) / fact)

    def cos(self):
        a = self.value[..., None]
        k = np.arange(self.order + 1)
        fact = np.array([math.factorial(i) for i in k], dtype=float)
        return self._apply(np.cos(a + k * np.pi / 2) / fact)

    def reciprocal(self):
        a = self.value[..., None]
        if np.any(a == 0):
            raise ZeroDivisionError("reciprocal of a jet with zero value")
        k = np.arange(self.order + 1)
        return self._apply((-1.0) ** k / a ** (k + 1))

    def log(self):
        a = self.value
        K = self.order
        series = np.zeros(a.shape + (K + 1,), dtype=np.result_type(a, float))
        series[..., 0] = np.log(a)
        for k in range(1, K + 1):
            series[..., k] = (-1.0) ** (k + 1) / (k * a**k)
        return self._apply(series)

    def sqrt(self):
        return self._apply(_series_power(self.value, 0.5, self.order))

    def tanh(self):
        # t' = 1 - t^2 solved coefficientwise in the local variable
        a = self.value
        K = self.order
        t = np.zeros(a.shape + (K + 1,), dtype=np.result_type(a, float))
        t[..., 0] = np.tanh(a)
        for k in range(K):
            sq = sum(t[..., i] * t[..., k - i] for i in range(k + 1))
            rhs = (1.0 if k == 0 else 0.0) - sq
            t[..., k + 1] = rhs / (k + 1)
        return self._apply(t)

    _UFUNCS = {
        np.exp: "exp",
        np.sin: "sin",
        np.cos: "cos",
        np.tanh: "tanh",
        np.log: "log",
        np.sqrt: "sqrt",
        np.reciprocal: "reciprocal",
        np.negative: "__neg__",
        np.positive: "__pos__",
    }

    def __array_ufunc__(self, ufunc, method, *inputs, **kwargs):
        if method != "__call__" or kwargs:
            return NotImplemented
        if ufunc in self._UFUNCS and len(inputs) == 1:
            return getattr(inputs[0], self._UFUNCS[ufunc])()
        if ufunc is np.square:
            return inputs[0] * inputs[0]
        binary = {
            np.add: lambda a, b: a + b,
            np.subtract: lambda a, b: a - b,
            np.multiply: lambda a, b: a * b,
            np.true_divide: lambda a, b: a / b,
            np.power: lambda a, b: a**b,
        }
        if ufunc in binary and len(inputs) == 2:
            a, b = inputs
            if isinstance(a, JetPoly):
                return binary[ufunc](a, b)
            if ufunc is np.add or ufunc is np.multiply:
                return binary[ufunc](b, a)
            if ufunc is np.subtract:
                return (-b) + a
            if ufunc is np.true_divide:
                return b.__rtruediv__(a)
        return NotImplemented

    # -- serialization ----------------------------------------------------

    def to_json(self) -> str:
        """Serialize a single (unbatched, real) jet."""
        if self.batch_shape:
            raise ValueError("only unbatched jets serialize to JSON")
        coeffs = [
            [list(alpha), [float(v) for v in self.coeffs[i]]]
            for i, alpha in enumerate(self.multiindices)
        ]
        return json.dumps(
            {
                "dim_in": self.dim_in,
                "dim_out": self.dim_out,
                "order": self.order,
                "basepoint": [float(x) for x in self.basepoint],
                "coeffs": coeffs,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "JetPoly":
        obj = json.loads(text)
        d, m, K = obj["dim_in"], obj["dim_out"], obj["order"]
        pos = mi.index_map(d, K)
        coeffs = np.zeros((mi.n_terms(d, K), m))
        seen = set()
        for alpha, values in obj["coeffs"]:
            alpha = tuple(alpha)
            if alpha not in pos or len(values) != m:
                raise ValueError(f"bad coefficient entry {alpha}")
            coeffs[pos[alpha]] = values
            seen.add(alpha)
        if len(seen) != len(pos):
            raise ValueError("jet JSON is missing coefficients")
        return cls(coeffs, np.array(obj["basepoint"], dtype=float), K)

    def __repr__(self):
        return (
            f"JetPoly(dim_in={self.dim_in}, dim_out={self.dim_out}, order={self.order}, "
            f"batch={self.batch_shape})"
        )


def _broadcast_coeffs(a: JetPoly, b: JetPoly):
    ca, cb = a.coeffs, b.coeffs
    if ca.shape[-1] != cb.shape[-1] and 1 not in (ca.shape[-1], cb.shape[-1]):
        raise JetMismatchError(f"dim_out differs: {a.dim_out} vs {b.dim_out}")
    batch = np.broadcast_shapes(a.batch_shape, b.batch_shape)
    m = max(ca.shape[-1], cb.shape[-1])
    ca = np.broadcast_to(ca, batch + ca.shape[-2:-1] + (m,))
    cb = np.broadcast_to(cb, batch + cb.shape[-2:-1] + (m,))
    base = np.broadcast_to(a.basepoint, batch + (a.dim_in,))
    return (ca, cb), base


def jet_mul(a: JetPoly, b: JetPoly) -> JetPoly:
    """Truncated product (Leibniz rule in normalized form), componentwise."""
    a._check_compatible(b)
    (ca, cb), base = _broadcast_coeffs(a, b)
    I, J, T = mi.product_table(a.dim_in, a.order)
    pairs = ca[..., I, :] * cb[..., J, :]
    coeffs = np.einsum("...pm,pt->...tm", pairs, T)
    return JetPoly(coeffs, base, a.order)


def jet_arith(a: JetPoly, b, op: str) -> JetPoly:
    """Dispatch ``add``, ``mul`` or ``scale`` on jets."""
    if op == "add":
        if not isinstance(b, JetPoly):
            raise JetMismatchError("add expects two jets")
        return a + b
    if op == "mul":
        if not isinstance(b, JetPoly):
            raise JetMismatchError("mul expects two jets")
        return jet_mul(a, b)
    if op == "scale":
        return a * b
    raise ValueError(f"unknown jet op {op!r}")


def _series_power(a: np.ndarray, s: float, K: int) -> np.ndarray:
    """Taylor coefficients of ``(a + h)^s`` in ``h``."""
    series = np.zeros(np.shape(a) + (K + 1,), dtype=np.result_type(a, float))
    series[..., 0] = a**s
    binom = 1.0
    for k in range(1, K + 1):
        binom *= (s - k + 1) / k
        series[..., k] = binom * a ** (s - k)
    return series
