"""Diffeomorphisms ``Id + phi`` as computational objects.

A :class:`DiffeoRep` keeps the jets of ``phi`` on a grid and, when
available, an evaluator that produces the jets of ``phi`` at arbitrary
points (a catalog closed form, a flow solve, or a composition/inversion of
such). Without an evaluator, off-grid values come from cubic
interpolation of the stored jets and the result is flagged.

Composition follows the convention ``compose(Phi, Psi) = Psi o Phi``.

The Trouvé generator of ``Phi = Id + phi`` is the field
``u(t, x) = phi(gamma(t)^{-1}(x))`` with ``gamma(t) = Id + t phi``; its flow
is ``gamma`` itself, so the time-1 flow reproduces ``Phi`` whenever the
whole segment stays inside the group. Larger diffeomorphisms are reached
through a polygon of such segments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline, RegularGridInterpolator

from .catalog import Profile
from .flow import ConcatField, TimeDependentField, solve_flow
from .jets import JetPoly, jet_compose, jet_inverse
from .spaces import GridSpec, SampledFunction

Evaluator = Callable[[np.ndarray, int], JetPoly]


class InversionError(ValueError):
    pass


class SegmentError(ValueError):
    pass


class RangeError(ValueError):
    pass


def _identity_jets(points, order):
    return JetPoly.identity(np.asarray(points, dtype=float), order)


@dataclass(frozen=True, eq=False)
class DiffeoRep:
    """``Phi = Id + phi`` with ``phi`` sampled as jets on a grid.

    Parameters
    ----------
    phi : SampledFunction
        Jets of ``phi`` (``d -> d``) at the grid nodes.
    evaluator : callable, optional
        ``evaluator(points, K)`` returns the jets of ``phi`` at ``points``.
    interpolated : bool
        Set when any stored value came from interpolation.
    tail_tol : float
        Largest ``|phi|`` on the grid boundary for which ``phi`` may be
        continued by zero outside the box.
    """

    phi: SampledFunction
    evaluator: Evaluator | None = None
    interpolated: bool = False
    tail_tol: float = 1e-8
    tag: str | None = None

    @classmethod
    def from_evaluator(cls, grid: GridSpec, evaluator: Evaluator, order: int = 2, tag: str | None = None):
        jets = evaluator(grid.points(), order)
        return cls(SampledFunction(grid, jets, tag=tag), evaluator, tag=tag)

    @classmethod
    def from_profile(cls, grid: GridSpec, profile: Profile, order: int = 2) -> "DiffeoRep":
        return cls.from_evaluator(grid, lambda pts, K: profile.jets(pts, K), order, tag=profile.kind)

    @classmethod
    def identity(cls, grid: GridSpec, order: int = 2) -> "DiffeoRep":
        return cls.from_profile(grid, Profile("zero", grid.d), order)

    @classmethod
    def from_flow(cls, u: TimeDependentField, grid: GridSpec, order: int = 2, **solver_kw) -> "DiffeoRep":
        """Time-1 flow of ``u``; off-grid points are solved for on demand."""

        def ev(pts, K):
            traj = solve_flow(u, pts, K, **solver_kw)
            J = traj.jets(traj.t_end)
            return J - _identity_jets(pts, K)

        return cls.from_evaluator(grid, ev, order, tag="flow")

    # -- basic data ------------------------------------------------------

    @property
    def grid(self) -> GridSpec:
        return self.phi.grid

    @property
    def order(self) -> int:
        return self.phi.order

    @property
    def d(self) -> int:
        return self.grid.d

    @property
    def points(self) -> np.ndarray:
        return self.phi.points

    def jets(self) -> JetPoly:
        """Jets of ``Phi`` itself at the grid nodes."""
        return _identity_jets(self.points, self.order) + self.phi.jets

    @property
    def det(self) -> np.ndarray:
        if self.order < 1:
            raise ValueError("determinants need jets of order >= 1")
        return np.linalg.det(self.jets().jacobian())

    @property
    def det_inf(self) -> float:
        return float(self.det.min())

    def dphi_sup(self) -> float:
        """``sup_x ||d phi(x)||`` (spectral norm) over grid nodes."""
        return float(np.linalg.norm(self.phi.jets.jacobian(), ord=2, axis=(-2, -1)).max())

    def scaled(self, s: float) -> "DiffeoRep":
        """``Id + s phi``."""
        ev = None if self.evaluator is None else (lambda pts, K, e=self.evaluator: e(pts, K) * s)
        jets = self.phi.jets * s
        return DiffeoRep(SampledFunction(self.grid, jets), ev, self.interpolated, self.tail_tol, self.tag)

    # -- off-grid evaluation ------------------------------------------------

    def phi_jets(self, points, order: int | None = None) -> JetPoly:
        """Jets of ``phi`` at arbitrary points."""
        K = self.order if order is None else order
        pts = np.asarray(points, dtype=float)
        if self.evaluator is not None:
            return self.evaluator(pts, K)
        if K > self.order:
            raise ValueError(f"interpolated jets are limited to the stored order {self.order}")
        return self._interpolate(pts).truncate(K)

    def _interpolate(self, pts: np.ndarray) -> JetPoly:
        grid = self.grid
        axis, _ = grid.axis()
        coeffs = self.phi.jets.coeffs
        flat = pts.reshape(-1, grid.d)
        lo, hi = axis[0], axis[-1]
        outside = np.any((flat < lo) | (flat > hi), axis=-1)
        if outside.any():
            edge = np.abs(self.phi.values[grid.on_boundary()]).max()
            if edge > self.tail_tol:
                raise RangeError(
                    f"range escapes the grid and phi is {edge:.3g} on the boundary (> tail tolerance)"
                )
        shape = (grid.n,) * grid.d + coeffs.shape[1:]
        table = coeffs.reshape(shape)
        if grid.d == 1:
            out = CubicSpline(axis, table, axis=0)(flat[:, 0])
        else:
            out = RegularGridInterpolator([axis] * grid.d, table, method="cubic", bounds_error=False,
                                          fill_value=0.0)(flat)
        out[outside] = 0.0
        out = out.reshape(pts.shape[:-1] + coeffs.shape[1:])
        return JetPoly(out, pts, self.order)

    def __call__(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return pts + self.phi_jets(pts, 0).value

    def to_json(self) -> str:
        return self.phi.to_json()

    @classmethod
    def from_json(cls, text: str) -> "DiffeoRep":
        f = SampledFunction.from_json(text)
        return cls(f, None, True, tag=f.tag)


@dataclass(frozen=True)
class MembershipReport:
    member: bool
    det_min: float
    argmin: tuple[float, ...]

    def __bool__(self):
        return self.member


def is_member(Phi: DiffeoRep, margin: float = 1e-8) -> MembershipReport:
    """``det d(Id + phi) >= margin`` at every grid node."""
    det = Phi.det
    i = int(np.argmin(det))
    ok = bool(np.all(np.isfinite(Phi.phi.values)) and det[i] >= margin)
    return MembershipReport(ok, float(det[i]), tuple(float(v) for v in Phi.points[i]))


def _compose_at(Phi: DiffeoRep, Psi: DiffeoRep, pts, K) -> JetPoly:
    JPhi = _identity_jets(pts, K) + Phi.phi_jets(pts, K)
    y = JPhi.value
    JPsi = _identity_jets(y, K) + Psi.phi_jets(y, K)
    return jet_compose(JPsi, JPhi) - _identity_jets(pts, K)


def compose(Phi: DiffeoRep, Psi: DiffeoRep) -> DiffeoRep:
    """``Psi o Phi`` on ``Phi``'s grid."""
    if Phi.d != Psi.d:
        raise ValueError("dimension mismatch")
    K = min(Phi.order, Psi.order)
    JPhi = Phi.jets().truncate(K)
    y = JPhi.value
    JPsi = _identity_jets(y, K) + Psi.phi_jets(y, K)
    phi = jet_compose(JPsi, JPhi) - _identity_jets(Phi.points, K)
    both = Phi.evaluator is not None and Psi.evaluator is not None
    ev = (lambda pts, k: _compose_at(Phi, Psi, pts, k)) if both else None
    flag = Phi.interpolated or Psi.interpolated or Psi.evaluator is None
    return DiffeoRep(SampledFunction(Phi.grid, phi), ev, flag, Phi.tail_tol)


def _newton_preimage(phi_jets: Callable[[np.ndarray], JetPoly], x: np.ndarray, scale, tol: float, max_iter: int):
    """Solve ``y + scale * phi(y) = x`` pointwise by Newton's method."""
    scale = np.asarray(scale, dtype=float)
    s = scale[..., None] if scale.ndim else scale
    d = x.shape[-1]
    y = x - s * phi_jets(x).value
    eye = np.eye(d)
    for _ in range(max_iter):
        J = phi_jets(y)
        F = y + s * J.value - x
        err = np.max(np.abs(F)) if F.size else 0.0
        if not math.isfinite(err):
            break
        if err <= tol:
            return y
        jac = eye + (s[..., None] if np.ndim(s) else s) * J.jacobian()
        try:
            step = np.linalg.solve(jac, F[..., None])[..., 0]
        except np.linalg.LinAlgError:
            break
        y = y - step
    raise InversionError("inversion failed: likely non-bijective on grid")


def _invert_at(Phi: DiffeoRep, x: np.ndarray, K: int, tol: float = 1e-13, max_iter: int = 60) -> JetPoly:
    y = _newton_preimage(lambda z: Phi.phi_jets(z, 1), x, 1.0, tol, max_iter)
    if K == 0:
        return JetPoly.constant(y - x, x, 0)
    JPhi = _identity_jets(y, K) + Phi.phi_jets(y, K)
    inv = jet_inverse(JPhi).rebase(x)
    return inv - _identity_jets(x, K)


def invert(Phi: DiffeoRep, margin: float = 1e-8) -> DiffeoRep:
    """``Phi^{-1}`` on the same grid: Newton per node, then jet inversion."""
    rep = is_member(Phi, margin)
    if not rep.member:
        raise InversionError(
            f"inversion failed: likely non-bijective on grid (det {rep.det_min:.3g} at {rep.argmin})"
        )
    phi = _invert_at(Phi, Phi.points, Phi.order)
    ev = lambda pts, K: _invert_at(Phi, np.asarray(pts, dtype=float), K)  # noqa: E731
    return DiffeoRep(SampledFunction(Phi.grid, phi), ev, Phi.interpolated or Phi.evaluator is None, Phi.tail_tol)


# -- Trouvé generator -----------------------------------------------------------


SEGMENT_BOUND = 1.0


def segment_check(phi_rel: DiffeoRep) -> tuple[bool, float]:
    """Sufficient test ``sup ||d phi|| < 1`` for ``Id + t phi`` to stay invertible."""
    sup = phi_rel.dphi_sup()
    return sup < SEGMENT_BOUND, sup


class TrouveField(TimeDependentField):
    """``u(t, x) = phi(gamma(t)^{-1} x)`` with ``gamma(t) = Id + t phi``."""

    def __init__(self, Phi: DiffeoRep, tol: float = 1e-13, max_iter: int = 60):
        self.Phi = Phi
        self.d = Phi.d
        self.breakpoints = ()
        self.tol, self.max_iter = tol, max_iter

    def _preimage(self, t, x):
        x = np.asarray(x, dtype=float)
        tt = np.broadcast_to(np.asarray(t, dtype=float), x.shape[:-1])
        return tt, _newton_preimage(lambda z: self.Phi.phi_jets(z, 1), x, tt, self.tol, self.max_iter)

    def values(self, t, x):
        _, y = self._preimage(t, x)
        return self.Phi.phi_jets(y, 0).value

    def jets(self, t, points, order):
        tt, y = self._preimage(t, points)
        if order == 0:
            return self.Phi.phi_jets(y, 0).rebase(np.asarray(points, dtype=float))
        Jphi = self.Phi.phi_jets(y, order)
        Jgamma = _identity_jets(y, order) + Jphi * tt
        inv = jet_inverse(Jgamma)
        return jet_compose(Jphi, inv).rebase(np.asarray(points, dtype=float))


def trouve_generator(Phi: DiffeoRep, check: bool = True) -> TrouveField:
    """Field whose time-1 flow is ``Phi``, via the straight segment ``Id + t phi``."""
    if check:
        ok, sup = segment_check(Phi)
        if not ok:
            raise SegmentError(
                f"segment leaves Diff: sup|d phi| = {sup:.4g} >= 1; use polygon_generator"
            )
    return TrouveField(Phi)


def _is_identity(Phi: DiffeoRep) -> bool:
    return bool(np.all(Phi.phi.jets.coeffs == 0))


def relative_segments(vertices: Sequence[DiffeoRep]) -> list[DiffeoRep]:
    """``Phi_{k+1} o Phi_k^{-1}`` for consecutive vertices (identity prepended)."""
    verts = list(vertices)
    if not verts:
        raise ValueError("polygon needs at least one vertex")
    if not _is_identity(verts[0]):
        verts = [DiffeoRep.identity(verts[0].grid, verts[0].order)] + verts
    segs = []
    for k in range(len(verts) - 1):
        if _is_identity(verts[k]):
            segs.append(verts[k + 1])
        else:
            segs.append(compose(invert(verts[k]), verts[k + 1]))
    return segs


def polygon_generator(vertices: Sequence[DiffeoRep]) -> TimeDependentField:
    """Concatenate the Trouvé generators of the relative segments."""
    segs = relative_segments(vertices)
    fields = []
    for k, seg in enumerate(segs):
        ok, sup = segment_check(seg)
        if not ok:
            raise SegmentError(f"polygon segment {k} fails the segment check: sup|d phi_rel| = {sup:.4g} >= 1")
        fields.append(TrouveField(seg))
    return fields[0] if len(fields) == 1 else ConcatField(fields)


def refine_polygon(Phi: DiffeoRep, max_depth: int = 8) -> list[DiffeoRep]:
    """Vertices ``Id + (j / 2^m) phi`` with the smallest ``m`` whose segments all pass.

    Only the straight path is bisected; the vertices themselves must be
    members for the relative segments to exist.
    """
    for depth in range(max_depth + 1):
        n = 2**depth
        verts = [Phi.scaled(j / n) for j in range(1, n + 1)]
        if all(is_member(v).member for v in verts):
            segs = relative_segments(verts)
            if all(segment_check(s)[0] for s in segs):
                return verts
    raise SegmentError(f"no polygon along the straight path passes within depth {max_depth}")


def group_distance(a: DiffeoRep, b: DiffeoRep) -> float:
    """``sup |phi_a - phi_b|`` over grid nodes (shared grid)."""
    return float(np.max(np.abs(a.phi.values - b.phi.values)))


def with_tag(Phi: DiffeoRep, tag: str) -> DiffeoRep:
    return replace(Phi, tag=tag)
