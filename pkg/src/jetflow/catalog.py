"""Closed-form spatial profiles and time modulations.

A profile is a map ``R^d -> R^m`` written once against numpy. Called on a
float or complex array of shape ``(..., d)`` it returns values of shape
``(..., m)``; called on a batched :class:`~jetflow.jets.JetPoly` (for
instance ``JetPoly.identity(points, K)``) it returns the jets of the map
at those points. The complex path is what the Bergman module uses to
evaluate holomorphic extensions on strips.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .jets import JetPoly


def coords(x) -> list:
    """Split ``x`` into its ``d`` coordinate functions."""
    if isinstance(x, JetPoly):
        return [x.component(i) for i in range(x.dim_out)]
    x = np.asarray(x)
    return [x[..., i] for i in range(x.shape[-1])]


def join(parts: Sequence, like) -> object:
    """Inverse of :func:`coords`: stack scalar parts into an ``m``-vector."""
    if isinstance(like, JetPoly):
        jets = []
        for p in parts:
            if not isinstance(p, JetPoly):
                p = JetPoly.constant(np.broadcast_to(np.asarray(p, float), like.batch_shape)[..., None],
                                     like.basepoint, like.order)
            jets.append(p)
        return JetPoly.stack(jets)
    like = np.asarray(like)
    shape = like.shape[:-1]
    return np.stack([np.broadcast_to(p, shape) for p in parts], axis=-1)


def _sq_norm(xs, center):
    return sum((xi - ci) * (xi - ci) for xi, ci in zip(xs, center))


def _vec(value, m: int) -> np.ndarray:
    v = np.asarray(value, dtype=float)
    return np.broadcast_to(v, (m,)).copy() if v.ndim == 0 else v


@dataclass(frozen=True)
class Profile:
    """Catalog entry ``v: R^d -> R^m`` identified by ``kind`` and ``params``.

    Kinds
    -----
    ``zero``
        ``v = 0``.
    ``constant``
        ``v = c`` (``params: value``).
    ``linear``
        ``v = A x`` (``params: matrix``).
    ``gaussian``
        ``a exp(-|x - c|^2 / w^2)`` (``amplitude``, ``width``, ``center``).
    ``sin``
        ``a_j sin(x_j)`` componentwise (``amplitude``).
    ``sin_gauss``
        ``a sin(x_1 + phase) exp(-|x|^2 / w^2)``; entire, so it extends to
        every polystrip.
    ``x_gauss``
        ``a_j x_j exp(-|x|^2 / w^2)``.
    ``tanh``
        ``a_j tanh(x_j)``.
    ``bump``
        ``a exp(-1 / (1 - |x - c|^2 / R^2))`` inside the ball, 0 outside.
    ``sum``
        Sum of the profiles listed under ``terms``.
    """

    kind: str
    d: int = 1
    m: int | None = None
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.m is None:
            object.__setattr__(self, "m", self.d)
        if self.kind not in _KINDS:
            raise ValueError(f"unknown profile kind {self.kind!r}")

    @classmethod
    def from_config(cls, cfg: dict) -> "Profile":
        cfg = dict(cfg)
        kind = cfg.pop("kind")
        d = int(cfg.pop("d", 1))
        m = cfg.pop("m", None)
        if kind == "sum":
            cfg["terms"] = [t if isinstance(t, Profile) else cls.from_config({"d": d, "m": m, **t})
                            for t in cfg["terms"]]
        return cls(kind, d, m, cfg)

    def to_config(self) -> dict:
        params = dict(self.params)
        if self.kind == "sum":
            params["terms"] = [t.to_config() for t in params["terms"]]
        return {"kind": self.kind, "d": self.d, "m": self.m, **_plain(params)}

    @property
    def is_entire(self) -> bool:
        """True when the profile extends holomorphically to all of ``C^d``."""
        if self.kind == "sum":
            return all(t.is_entire for t in self.params["terms"])
        return self.kind in {"zero", "constant", "linear", "gaussian", "sin", "sin_gauss", "x_gauss"}

    def __call__(self, x):
        return _KINDS[self.kind](self, x)

    def jets(self, points, order: int) -> JetPoly:
        return self(JetPoly.identity(points, order))

    def scaled(self, c: float) -> "Profile":
        return Profile("sum", self.d, self.m, {"terms": [self], "weights": [float(c)]})


def _plain(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def _zero(p: Profile, x):
    xs = coords(x)
    return join([0.0 * xs[0]] * p.m, x) if isinstance(x, JetPoly) else np.zeros(
        np.shape(x)[:-1] + (p.m,), dtype=np.result_type(np.asarray(x), float)
    )


def _constant(p: Profile, x):
    c = _vec(p.params.get("value", 0.0), p.m)
    if isinstance(x, JetPoly):
        return JetPoly.constant(np.broadcast_to(c, x.batch_shape + (p.m,)), x.basepoint, x.order)
    x = np.asarray(x)
    return np.broadcast_to(c, x.shape[:-1] + (p.m,)).astype(np.result_type(x, float))


def _linear(p: Profile, x):
    A = np.asarray(p.params["matrix"], dtype=float).reshape(p.m, p.d)
    xs = coords(x)
    return join([sum(A[i, j] * xs[j] for j in range(p.d)) for i in range(p.m)], x)


def _gaussian(p: Profile, x):
    xs = coords(x)
    a = _vec(p.params.get("amplitude", 1.0), p.m)
    w = float(p.params.get("width", 1.0))
    c = _vec(p.params.get("center", 0.0), p.d)
    g = np.exp(-_sq_norm(xs, c) / (w * w))
    return join([a[i] * g for i in range(p.m)], x)


def _sin(p: Profile, x):
    xs = coords(x)
    a = _vec(p.params.get("amplitude", 1.0), p.m)
    return join([a[i] * np.sin(xs[i % p.d]) for i in range(p.m)], x)


def _sin_gauss(p: Profile, x):
    xs = coords(x)
    a = _vec(p.params.get("amplitude", 1.0), p.m)
    w = float(p.params.get("width", 1.0))
    phase = float(p.params.get("phase", 0.0))
    g = np.sin(xs[0] + phase) * np.exp(-_sq_norm(xs, np.zeros(p.d)) / (w * w))
    return join([a[i] * g for i in range(p.m)], x)


def _x_gauss(p: Profile, x):
    xs = coords(x)
    a = _vec(p.params.get("amplitude", 1.0), p.m)
    w = float(p.params.get("width", 1.0))
    g = np.exp(-_sq_norm(xs, np.zeros(p.d)) / (w * w))
    return join([a[i] * xs[i % p.d] * g for i in range(p.m)], x)


def _tanh(p: Profile, x):
    xs = coords(x)
    a = _vec(p.params.get("amplitude", 1.0), p.m)
    return join([a[i] * np.tanh(xs[i % p.d]) for i in range(p.m)], x)


def _bump(p: Profile, x):
    a = _vec(p.params.get("amplitude", 1.0), p.m)
    R = float(p.params.get("radius", 1.0))
    c = _vec(p.params.get("center", 0.0), p.d)
    if isinstance(x, JetPoly):
        base = x.value
        inside = np.sum((base - c) ** 2, axis=-1) < R * R * (1 - 1e-9)
        # evaluate at a safe point where outside, then zero those entries
        safe = np.where(inside[..., None, None], x.coeffs, 0.0)
        safe[..., 0, :] = np.where(inside[..., None], base, c)
        xj = JetPoly(safe, x.basepoint, x.order)
        s = _sq_norm(coords(xj), c) / (R * R)
        g = np.exp(-1.0 / (1.0 - s))
        out = join([a[i] * g for i in range(p.m)], xj)
        return JetPoly(np.where(inside[..., None, None], out.coeffs, 0.0), x.basepoint, x.order)
    x = np.asarray(x, dtype=float)
    s = np.sum((x - c) ** 2, axis=-1) / (R * R)
    with np.errstate(divide="ignore", over="ignore"):
        g = np.where(s < 1, np.exp(-1.0 / np.where(s < 1, 1.0 - s, 1.0)), 0.0)
    return g[..., None] * a


def _sum(p: Profile, x):
    terms = p.params["terms"]
    weights = p.params.get("weights", [1.0] * len(terms))
    out = None
    for w, t in zip(weights, terms):
        v = t(x) * w
        out = v if out is None else out + v
    return out


_KINDS: dict[str, Callable] = {
    "zero": _zero,
    "constant": _constant,
    "linear": _linear,
    "gaussian": _gaussian,
    "sin": _sin,
    "sin_gauss": _sin_gauss,
    "x_gauss": _x_gauss,
    "tanh": _tanh,
    "bump": _bump,
    "sum": _sum,
}


@dataclass(frozen=True)
class TimeProfile:
    """Scalar modulation ``a(t)`` on ``[0, 1]``.

    ``constant`` (``value``), ``affine`` (``c0 + c1 t``), ``cosine``
    (``c0 + c1 cos(2 pi f t)``) and ``step`` (``values`` on the pieces cut
    by ``cuts``). Only ``step`` has breakpoints.
    """

    kind: str = "constant"
    params: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_config(cls, cfg) -> "TimeProfile":
        if isinstance(cfg, (int, float)):
            return cls("constant", {"value": float(cfg)})
        cfg = dict(cfg)
        return cls(cfg.pop("kind", "constant"), cfg)

    def to_config(self) -> dict:
        return {"kind": self.kind, **_plain(self.params)}

    @property
    def breakpoints(self) -> tuple[float, ...]:
        if self.kind == "step":
            return tuple(float(c) for c in self.params["cuts"])
        return ()

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        k = self.kind
        if k == "constant":
            return np.full(t.shape, float(self.params.get("value", 1.0)))
        if k == "affine":
            return self.params.get("c0", 0.0) + self.params.get("c1", 1.0) * t
        if k == "cosine":
            f = self.params.get("freq", 1.0)
            return self.params.get("c0", 1.0) + self.params.get("c1", 0.5) * np.cos(2 * np.pi * f * t)
        if k == "step":
            vals = np.asarray(self.params["values"], dtype=float)
            return vals[np.searchsorted(np.asarray(self.params["cuts"]), t, side="right")]
        raise ValueError(f"unknown time profile kind {k!r}")
