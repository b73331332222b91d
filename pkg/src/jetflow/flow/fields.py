"""Time-dependent vector fields ``u(t, x)`` on ``[0, 1] x R^d``.

Fields answer two questions: values ``u(t, x)`` and spatial jets of
``u(t, .)`` at given points. ``t`` broadcasts against the batch shape of
the points, so a solver can ask for all (time node, grid node) pairs at
once. Fields with jumps in time list them in ``breakpoints``; the solver
and every time quadrature split there.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..catalog import Profile, TimeProfile
from ..jets import JetPoly


class TimeDependentField:
    """Base class. Subclasses implement :meth:`values` and :meth:`jets`."""

    d: int = 1
    breakpoints: tuple[float, ...] = ()

    def values(self, t, x) -> np.ndarray:
        raise NotImplementedError

    def jets(self, t, points, order: int) -> JetPoly:
        raise NotImplementedError

    def __call__(self, t, x):
        return self.values(t, x)

    def scaled(self, c: float) -> "TimeDependentField":
        return ScaledField(self, c)

    def to_config(self) -> dict:
        raise NotImplementedError(f"{type(self).__name__} has no config form")


def _batch_t(t, batch_shape) -> np.ndarray:
    return np.broadcast_to(np.asarray(t, dtype=float), batch_shape)


class SeparableField(TimeDependentField):
    """``u(t, x) = a(t) v(x)`` with catalog profile ``v`` and modulation ``a``."""

    def __init__(self, profile: Profile, time: TimeProfile | None = None):
        self.profile = profile
        self.time = time or TimeProfile("constant", {"value": 1.0})
        self.d = profile.d
        self.breakpoints = self.time.breakpoints

    def values(self, t, x):
        x = np.asarray(x)
        a = _batch_t(t, x.shape[:-1])
        return self.time(a)[..., None] * self.profile(x)

    def jets(self, t, points, order):
        points = np.asarray(points, dtype=float)
        a = self.time(_batch_t(t, points.shape[:-1]))
        return self.profile.jets(points, order) * a

    def to_config(self):
        return {"kind": "separable", "profile": self.profile.to_config(), "time": self.time.to_config()}

    def __repr__(self):
        return f"SeparableField({self.profile.kind}, {self.time.kind})"


def zero_field(d: int = 1) -> SeparableField:
    return SeparableField(Profile("zero", d))


class ScaledField(TimeDependentField):
    def __init__(self, base: TimeDependentField, c: float):
        self.base, self.c = base, float(c)
        self.d = base.d
        self.breakpoints = base.breakpoints

    def values(self, t, x):
        return self.c * self.base.values(t, x)

    def jets(self, t, points, order):
        return self.base.jets(t, points, order) * self.c

    def to_config(self):
        return {"kind": "scaled", "factor": self.c, "field": self.base.to_config()}


class SumField(TimeDependentField):
    def __init__(self, terms: Sequence[TimeDependentField]):
        self.terms = list(terms)
        self.d = self.terms[0].d
        self.breakpoints = tuple(sorted({b for f in self.terms for b in f.breakpoints}))

    def values(self, t, x):
        return sum(f.values(t, x) for f in self.terms)

    def jets(self, t, points, order):
        out = self.terms[0].jets(t, points, order)
        for f in self.terms[1:]:
            out = out + f.jets(t, points, order)
        return out

    def to_config(self):
        return {"kind": "sum", "fields": [f.to_config() for f in self.terms]}


class ConcatField(TimeDependentField):
    """Run ``n`` fields one after another, each on a slice of length ``1/n``.

    On ``[k/n, (k+1)/n)`` the field is ``n u_k(n t - k, x)``, so its flow
    over that slice equals the time-1 flow of ``u_k``. For two pieces this
    is ``w_1(t) = 2u(2t)`` on the first half and ``2v(2t - 1)`` on the
    second.
    """

    def __init__(self, pieces: Sequence[TimeDependentField]):
        if not pieces:
            raise ValueError("need at least one field to concatenate")
        self.pieces = list(pieces)
        n = len(self.pieces)
        self.d = self.pieces[0].d
        bps = {k / n for k in range(1, n)}
        for k, f in enumerate(self.pieces):
            bps.update((k + b) / n for b in f.breakpoints)
        self.breakpoints = tuple(sorted(bps))

    def _slices(self, t, batch_shape):
        n = len(self.pieces)
        tt = _batch_t(t, batch_shape)
        idx = np.clip(np.floor(tt * n).astype(int), 0, n - 1)
        return n, tt, idx

    def values(self, t, x):
        x = np.asarray(x)
        n, tt, idx = self._slices(t, x.shape[:-1])
        out = np.zeros(x.shape, dtype=np.result_type(x, float))
        for k, f in enumerate(self.pieces):
            sel = idx == k
            if np.any(sel):
                out[sel] = n * f.values(n * tt[sel] - k, x[sel])
        return out

    def jets(self, t, points, order):
        points = np.asarray(points, dtype=float)
        n, tt, idx = self._slices(t, points.shape[:-1])
        out = JetPoly.identity(points, order)
        coeffs = np.zeros_like(out.coeffs)
        for k, f in enumerate(self.pieces):
            sel = idx == k
            if np.any(sel):
                coeffs[sel] = n * f.jets(n * tt[sel] - k, points[sel], order).coeffs
        return JetPoly(coeffs, points, order)

    def to_config(self):
        return {"kind": "concat", "fields": [f.to_config() for f in self.pieces]}


class ReversedField(TimeDependentField):
    """``v(t, x) = -u(1 - t, x)``; its time-1 flow inverts that of ``u``."""

    def __init__(self, base: TimeDependentField):
        self.base = base
        self.d = base.d
        self.breakpoints = tuple(sorted(1.0 - b for b in base.breakpoints))

    def values(self, t, x):
        return -self.base.values(1.0 - np.asarray(t, dtype=float), x)

    def jets(self, t, points, order):
        return -self.base.jets(1.0 - np.asarray(t, dtype=float), points, order)

    def to_config(self):
        return {"kind": "reverse", "field": self.base.to_config()}


def concat_fields(*fields: TimeDependentField) -> ConcatField:
    """Field whose time-1 flow is ``Phi_last(1) o ... o Phi_first(1)``."""
    return ConcatField(fields)


def reverse_field(u: TimeDependentField) -> TimeDependentField:
    """Time reversal; reversing twice returns the original object."""
    if isinstance(u, ReversedField):
        return u.base
    return ReversedField(u)


def field_from_config(cfg: dict) -> TimeDependentField:
    """Build a field from its JSON description.

    ``{"kind": "separable", "profile": {...}, "time": {...}}``,
    ``{"kind": "concat", "fields": [...]}``, ``{"kind": "reverse", "field": {...}}``,
    ``{"kind": "scaled", "factor": c, "field": {...}}`` or
    ``{"kind": "sum", "fields": [...]}``.
    """
    kind = cfg.get("kind", "separable")
    if kind == "separable":
        time = cfg.get("time")
        return SeparableField(
            Profile.from_config(cfg["profile"]),
            TimeProfile.from_config(time) if time is not None else None,
        )
    if kind == "concat":
        return ConcatField([field_from_config(c) for c in cfg["fields"]])
    if kind == "reverse":
        return reverse_field(field_from_config(cfg["field"]))
    if kind == "scaled":
        return ScaledField(field_from_config(cfg["field"]), cfg["factor"])
    if kind == "sum":
        return SumField([field_from_config(c) for c in cfg["fields"]])
    raise ValueError(f"unknown field kind {kind!r}")
