"""Picard fixed-point flow solver with contraction windows and gluing.

Within a window ``J = [t0, t0 + delta]`` the solver iterates

    T(phi, x)(t) = int_{t0}^t u(s, x + phi(s, x)) ds

on spatial jets rather than on values alone: the integrand at each time
node is ``Jet(u(s, .)) o Jet(Id + phi(s, .))``, so the fixed point carries
the jets of the flow map along with its values. Time is discretized by
collocation at Gauss-Legendre nodes of the window; the integral operator
becomes an exact integration of the Lagrange interpolant, which is also
how the solution is evaluated at arbitrary times.

Windows are chosen so that

    max(1, rho) M_1 int_J ||u(s)||^M_rho ds <= 1/2,

which makes ``T`` a contraction with constant 1/2. Successive windows
are glued by composing jets: with ``y_k(x) = x + phi(x)(t_k)`` the global
flow on ``J_{k+1}`` is the window flow started at ``y_k(x)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..jets import JetPoly, jet_compose
from ..sequences import WeightSequence
from ..spaces import GridSpec, SampledFunction, ultradiff_seminorm
from .fields import TimeDependentField

CONTRACTION_BOUND = 0.5
TIME_QUAD_NODES = 8


class FlowError(RuntimeError):
    """Numerical failure inside the flow solver."""


class AdmissibilityError(FlowError):
    def __init__(self, M: WeightSequence, rho: float, detail: str = ""):
        super().__init__(f"field not admissible at (M, rho) = ({M.generator}, {rho}){detail}")


# -- time quadrature ---------------------------------------------------------


def _gl(n: int):
    return np.polynomial.legendre.leggauss(n)


def split_at(a: float, b: float, breakpoints) -> list[tuple[float, float]]:
    cuts = [a] + [c for c in breakpoints if a < c < b] + [b]
    return list(zip(cuts[:-1], cuts[1:]))


def time_integral(fn, a: float, b: float, breakpoints=(), nodes: int = TIME_QUAD_NODES, pieces: int = 1) -> float:
    """Composite Gauss-Legendre integral of a scalar function of ``t``.

    The interval is first split at ``breakpoints``, then each piece into
    ``pieces`` equal parts.
    """
    s, w = _gl(nodes)
    total = 0.0
    for lo, hi in split_at(a, b, breakpoints):
        edges = np.linspace(lo, hi, pieces + 1)
        for p, q in zip(edges[:-1], edges[1:]):
            half = (q - p) / 2
            total += half * sum(wi * fn(p + half * (si + 1)) for si, wi in zip(s, w))
    return total


# -- contraction windows -----------------------------------------------------


def default_seminorm_grid(d: int) -> GridSpec:
    return GridSpec(d, 8.0, 161 if d == 1 else 33, "trapezoid")


def _alpha_profile(u: TimeDependentField, t: float, K_max: int, grid: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Per-multi-index ``||d^alpha u(t)||_sup / |alpha|!`` and ``|alpha|``."""
    from ..spaces import _alpha_norms

    jets = u.jets(t, grid.points(), K_max)
    return _alpha_norms(SampledFunction(grid, jets), math.inf, K_max)


def _seminorm_from_profile(norms, orders, M: WeightSequence, rho: float) -> float:
    denom = np.array([rho ** int(k) * M[int(k)] for k in orders])
    return float(np.max(norms / denom))


def field_seminorm(u: TimeDependentField, t: float, M: WeightSequence, rho: float, K_max: int,
                   grid: GridSpec | None = None) -> float:
    """Truncated ``||u(t)||^M_rho`` (sup norm over a grid)."""
    grid = grid or default_seminorm_grid(u.d)
    jets = u.jets(t, grid.points(), K_max)
    return ultradiff_seminorm(SampledFunction(grid, jets), M, rho, math.inf, K_max)


@dataclass(frozen=True)
class PicardWindow:
    t0: float
    delta: float
    rho: float
    M1: float
    contraction_value: float

    @property
    def t1(self) -> float:
        return self.t0 + self.delta


def pick_delta(
    u: TimeDependentField,
    rho: float = 1.0,
    M: WeightSequence | None = None,
    t0: float = 0.0,
    *,
    t_end: float = 1.0,
    K_max: int = 4,
    grid: GridSpec | None = None,
    max_halvings: int = 40,
    cache: dict | None = None,
    floor: float = 0.0,
) -> PicardWindow | None:
    """Largest ``delta`` of a halving search with contraction value ``<= 1/2``.

    The search starts from the remaining interval up to the next time
    breakpoint (or ``t_end``). ``cache`` may be shared between calls with
    the same field, grid and ``K_max``; it stores per-order derivative
    norms, which do not depend on ``rho`` or ``M``. With ``floor > 0`` the
    search gives up (returning ``None``) once ``delta`` drops below it.
    """
    M = M or WeightSequence.constant(max(K_max, 2))
    if K_max > M.N:
        raise ValueError(f"K_max={K_max} exceeds the stored weight sequence length {M.N}")
    grid = grid or default_seminorm_grid(u.d)
    stop = min([t_end] + [b for b in u.breakpoints if b > t0 + 1e-14])
    cache = {} if cache is None else cache

    def g(s):
        if s not in cache:
            cache[s] = _alpha_profile(u, s, K_max, grid)
        return _seminorm_from_profile(*cache[s], M, rho)

    scale = max(1.0, rho) * M[1]
    delta = stop - t0
    for _ in range(max_halvings + 1):
        with np.errstate(over="ignore"):
            value = scale * time_integral(g, t0, t0 + delta)
        if not math.isfinite(value):
            raise AdmissibilityError(M, rho, " (seminorm integral is not finite)")
        if value <= CONTRACTION_BOUND:
            return PicardWindow(t0, delta, rho, M[1], float(value))
        delta /= 2
        if delta < floor:
            return None
    raise AdmissibilityError(M, rho, f" (no window below 1/2 after {max_halvings} halvings)")


# -- collocation --------------------------------------------------------------


@dataclass(frozen=True)
class Collocation:
    """Gauss-Legendre collocation on ``[-1, 1]`` with ``n`` nodes."""

    n: int

    def __post_init__(self):
        s, w = _gl(self.n)
        V = np.polynomial.legendre.legvander(s, self.n - 1)
        object.__setattr__(self, "nodes", s)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "_C", np.linalg.inv(V))

    def integration_matrix(self, s_eval) -> np.ndarray:
        """``A[e, j] = int_{-1}^{s_e} l_j(s) ds`` for the Lagrange basis ``l_j``."""
        s_eval = np.atleast_1d(np.asarray(s_eval, dtype=float))
        Q = np.empty((s_eval.size, self.n))
        for k in range(self.n):
            e = np.zeros(self.n)
            e[k] = 1.0
            anti = np.polynomial.legendre.legint(e, lbnd=-1)
            Q[:, k] = np.polynomial.legendre.legval(s_eval, anti)
        return Q @ self._C


@dataclass(eq=False)
class WindowSolution:
    """Fixed point of the Picard operator on one window.

    ``integrand`` holds the jet coefficients of ``u(t_j, psi(t_j, z))``
    composed with ``Jet(psi(t_j, .))`` at the collocation nodes; the local
    flow is ``psi(t, z) = z + int_{t0}^t integrand``.
    """

    window: PicardWindow
    start: np.ndarray
    order: int
    colloc: Collocation
    integrand: np.ndarray
    iterations: int
    changes: list[float]
    converged: bool

    @property
    def times(self) -> np.ndarray:
        w = self.window
        return w.t0 + w.delta * (self.colloc.nodes + 1) / 2

    def local_jets(self, t: float) -> JetPoly:
        """Jets of ``psi(t, .)`` at the start points."""
        w = self.window
        s = 2 * (t - w.t0) / w.delta - 1
        A = self.colloc.integration_matrix([s])[0] * (w.delta / 2)
        base = JetPoly.identity(self.start, self.order)
        incr = np.tensordot(A, self.integrand, axes=(0, 0))
        return JetPoly(base.coeffs + incr, self.start, self.order)

    def decay_factors(self, floor: float = 1e-13) -> list[float]:
        """Ratios of successive sup-changes while above roundoff."""
        c = self.changes
        return [c[i + 1] / c[i] for i in range(len(c) - 1) if c[i + 1] > floor and c[i] > 0]


def picard_solve_window(
    u: TimeDependentField,
    window: PicardWindow,
    points,
    order: int = 1,
    phi_init=None,
    *,
    tol: float = 1e-10,
    max_iter: int = 60,
    n_t: int = 12,
    strict: bool = True,
) -> WindowSolution:
    """Iterate ``T`` on jets at ``points`` until the sup-change is ``<= tol``.

    Parameters
    ----------
    phi_init : array, optional
        Initial displacement at the collocation nodes, shape
        ``(n_t, P, d)``. Defaults to zero.
    strict : bool
        When false, stop silently after ``max_iter`` iterations; this is
        how deliberately truncated iterations are produced.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    colloc = Collocation(n_t)
    t_nodes = window.t0 + window.delta * (colloc.nodes + 1) / 2
    A = colloc.integration_matrix(colloc.nodes) * (window.delta / 2)

    ident = JetPoly.identity(np.broadcast_to(pts, (n_t,) + pts.shape), order)
    coeffs = ident.coeffs.copy()
    if phi_init is not None:
        coeffs[..., 0, :] += np.broadcast_to(phi_init, (n_t,) + pts.shape)
    changes: list[float] = []
    F = np.zeros_like(coeffs)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        J = JetPoly(coeffs, ident.basepoint, order)
        U = u.jets(t_nodes[:, None], J.value, order)
        F = jet_compose(U, J).coeffs
        new = ident.coeffs + np.tensordot(A, F, axes=(1, 0))
        change = float(np.max(np.abs(new - coeffs)))
        if not math.isfinite(change):
            raise FlowError("picard iteration produced non-finite values")
        changes.append(change)
        coeffs = new
        if change <= tol:
            converged = True
            break
    if not converged and strict:
        raise FlowError(
            f"picard iteration did not converge in {max_iter} steps on "
            f"[{window.t0:.6g}, {window.t1:.6g}] (last change {changes[-1]:.3g}); "
            "the window violates the contraction precondition"
        )
    if not converged:
        # keep the integrand consistent with the returned iterate
        J = JetPoly(coeffs, ident.basepoint, order)
        F = jet_compose(u.jets(t_nodes[:, None], J.value, order), J).coeffs if max_iter > 0 else F
    return WindowSolution(window, pts, order, colloc, F, it, changes, converged)


# -- global trajectories -----------------------------------------------------


@dataclass(eq=False)
class FlowTrajectory:
    """Glued flow ``Phi_u(t, .)`` at a fixed set of points.

    ``segments[k]`` pairs the window solution with the jets of
    ``Phi_u(t_k, .)`` at the points; the flow inside window ``k`` is the
    window solution composed with them.
    """

    field: TimeDependentField
    points: np.ndarray
    order: int
    segments: list[tuple[WindowSolution, JetPoly]]
    tol: float
    grid: GridSpec | None = None
    meta: dict = field(default_factory=dict)

    @property
    def windows(self) -> list[PicardWindow]:
        return [s.window for s, _ in self.segments]

    @property
    def t_end(self) -> float:
        return self.segments[-1][0].window.t1

    @property
    def iterations(self) -> list[int]:
        return [s.iterations for s, _ in self.segments]

    def _segment(self, t: float):
        if t < -1e-14 or t > self.t_end + 1e-12:
            raise ValueError(f"t={t} outside [0, {self.t_end}]")
        for sol, start in self.segments:
            if t <= sol.window.t1 + 1e-14:
                return sol, start
        return self.segments[-1]

    def jets(self, t: float) -> JetPoly:
        """Jets of ``Phi_u(t, .)`` at every point."""
        sol, start = self._segment(float(t))
        if float(t) <= sol.window.t0:
            return start
        return jet_compose(sol.local_jets(float(t)), start)

    def flow(self, t: float) -> np.ndarray:
        return self.jets(t).value

    def phi(self, t: float) -> np.ndarray:
        return self.flow(t) - self.points

    def jacobian_det(self, t: float) -> np.ndarray:
        if self.order < 1:
            raise ValueError("determinants need jets of order >= 1")
        return np.linalg.det(self.jets(t).jacobian())

    def sample_times(self) -> np.ndarray:
        ts = {0.0}
        for sol, _ in self.segments:
            ts.update(sol.times.tolist())
            ts.add(sol.window.t1)
        return np.array(sorted(ts))

    def decay_factors(self) -> list[float]:
        out: list[float] = []
        for sol, _ in self.segments:
            out.extend(sol.decay_factors())
        return out

    def rows(self, times=None) -> list[dict]:
        """``(t, x, phi, det)`` rows for export."""
        times = self.sample_times() if times is None else times
        out = []
        for t in times:
            ph = self.phi(t)
            det = self.jacobian_det(t) if self.order >= 1 else np.full(len(ph), np.nan)
            for i in range(len(ph)):
                row = {"t": float(t)}
                row.update({f"x{j}": float(self.points[i, j]) for j in range(self.points.shape[1])})
                row.update({f"phi{j}": float(ph[i, j]) for j in range(ph.shape[1])})
                row["det"] = float(det[i])
                out.append(row)
        return out


def glue_flow(
    u: TimeDependentField,
    windows: list[PicardWindow],
    points,
    order: int = 1,
    *,
    tol: float = 1e-10,
    max_iter: int = 60,
    n_t: int = 12,
    strict: bool = True,
) -> FlowTrajectory:
    """Solve window by window, restarting each from ``y_k(x) = x + phi(x)(t_k)``."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if not windows:
        raise FlowError("window chain broken: no windows given")
    if abs(windows[0].t0) > 1e-14:
        raise FlowError("window chain broken: first window must start at t=0")
    for a, b in zip(windows, windows[1:]):
        if abs(a.t1 - b.t0) > 1e-12:
            raise FlowError(f"window chain broken between t={a.t1} and t={b.t0}")
    start = JetPoly.identity(pts, order)
    segments = []
    for w in windows:
        y = start.value
        sol = picard_solve_window(u, w, y, order, tol=tol, max_iter=max_iter, n_t=n_t, strict=strict)
        segments.append((sol, start))
        start = jet_compose(sol.local_jets(w.t1), start)
    return FlowTrajectory(u, pts, order, segments, tol)


RHO_LADDER = (1.0, 2.0, 4.0, 8.0, 16.0, 32.0)


def pick_delta_auto(
    u: TimeDependentField,
    M: WeightSequence | None = None,
    t0: float = 0.0,
    *,
    ladder=RHO_LADDER,
    **kw,
) -> PicardWindow:
    """Window from the ``rho`` ladder rung that admits the largest ``delta``.

    Ties go to the smaller ``rho``. Rungs at which the field is not
    admissible are skipped.
    """
    best = None
    cache: dict = {}
    # top-down, so each rung may stop halving once it cannot win
    for rho in sorted(ladder, reverse=True):
        floor = 0.0 if best is None else best.delta * (1 - 1e-12)
        try:
            w = pick_delta(u, rho, M, t0, cache=cache, floor=floor, **kw)
        except AdmissibilityError:
            continue
        if w is not None and (best is None or w.delta >= best.delta * (1 - 1e-12)):
            best = w
    if best is None:
        raise AdmissibilityError(M or WeightSequence.constant(2), ladder[-1], " at every rung of the rho ladder")
    return best


def plan_windows(
    u: TimeDependentField,
    *,
    rho: float | str = "auto",
    M: WeightSequence | None = None,
    t_end: float = 1.0,
    K_max: int = 4,
    delta: float | None = None,
    grid: GridSpec | None = None,
) -> list[PicardWindow]:
    """Windows covering ``[0, t_end]``.

    ``rho="auto"`` picks each window with :func:`pick_delta_auto`. With
    ``delta`` given the windows have that length (cut at breakpoints) and
    their contraction values are reported but not enforced.
    """
    M = M or WeightSequence.constant(max(K_max, 2))
    out = []
    t = 0.0
    while t < t_end - 1e-14:
        if delta is None and rho == "auto":
            w = pick_delta_auto(u, M, t, t_end=t_end, K_max=K_max, grid=grid)
        elif delta is None:
            w = pick_delta(u, float(rho), M, t, t_end=t_end, K_max=K_max, grid=grid)
        else:
            r = 1.0 if rho == "auto" else float(rho)
            stop = min([t_end, t + delta] + [b for b in u.breakpoints if b > t + 1e-14])
            grid_ = grid or default_seminorm_grid(u.d)
            value = max(1.0, r) * M[1] * time_integral(
                lambda s: field_seminorm(u, s, M, r, K_max, grid_), t, stop
            )
            w = PicardWindow(t, stop - t, r, M[1], float(value))
        out.append(w)
        t = w.t1
    return out


def solve_flow(
    u: TimeDependentField,
    points,
    order: int = 1,
    *,
    rho: float | str = "auto",
    M: WeightSequence | None = None,
    t_end: float = 1.0,
    delta: float | None = None,
    tol: float = 1e-10,
    max_iter: int = 60,
    n_t: int = 12,
    K_max: int = 4,
    strict: bool = True,
) -> FlowTrajectory:
    """Plan contraction windows and glue their fixed points."""
    windows = plan_windows(u, rho=rho, M=M, t_end=t_end, K_max=K_max, delta=delta)
    traj = glue_flow(u, windows, points, order, tol=tol, max_iter=max_iter, n_t=n_t, strict=strict)
    traj.meta.update({"rho": rho, "K_max": K_max, "n_t": n_t})
    return traj


# -- diagnostics --------------------------------------------------------------


def flow_jet_transport(traj: FlowTrajectory, K: int, times=None) -> dict[float, JetPoly]:
    """Jets of ``Phi_u(t, .)`` to order ``K`` at the requested times."""
    if K > traj.order:
        raise ValueError(f"requested jet order {K} exceeds the transported order {traj.order}")
    times = traj.sample_times() if times is None else times
    return {float(t): traj.jets(t).truncate(K) for t in times}


def flow_residual(traj: FlowTrajectory, times=None, pieces: int = 4, nodes: int = TIME_QUAD_NODES) -> float:
    """``max |phi(t, x) - int_0^t u(s, x + phi(s, x)) ds|`` by composite quadrature.

    The quadrature nodes are independent of the collocation nodes used by
    the solver; ``phi(s, .)`` between them comes from the trajectory's own
    interpolant.
    """
    times = sorted({0.0, *(float(t) for t in (traj.sample_times() if times is None else times))})
    cuts = sorted({w.t0 for w in traj.windows} | {w.t1 for w in traj.windows} | set(traj.field.breakpoints))
    s, w = _gl(nodes)
    running = np.zeros_like(traj.points)
    worst = 0.0
    for a, b in zip(times[:-1], times[1:]):
        for lo, hi in split_at(a, b, cuts):
            edges = np.linspace(lo, hi, pieces + 1)
            for p, q in zip(edges[:-1], edges[1:]):
                half = (q - p) / 2
                for si, wi in zip(s, w):
                    tau = p + half * (si + 1)
                    running += half * wi * traj.field.values(tau, traj.flow(tau))
        worst = max(worst, float(np.max(np.abs(traj.phi(b) - running))))
    return worst


def det_jacobian_min(traj: FlowTrajectory) -> float:
    """Minimum of ``det dPhi_u(t, x)`` over sample times and points."""
    return float(min(traj.jacobian_det(t).min() for t in traj.sample_times()))


@dataclass(frozen=True)
class ContinuityRow:
    t0: float
    t1: float
    lhs: float
    rhs: float


def _jet_seminorm(coeffs: np.ndarray, d: int, order: int, M: WeightSequence, sigma: float) -> float:
    """Truncated sup seminorm of a jet batch ``(..., T, m)`` over the batch."""
    from ..jets import multiindex as mi

    ratio = np.array([mi.factorial(a) / math.factorial(mi.order(a)) for a in mi.enumerate_multiindices(d, order)])
    denom = np.array([sigma ** int(k) * M[int(k)] for k in mi.orders_array(d, order)])
    per_alpha = np.abs(coeffs).max(axis=-1).reshape(-1, coeffs.shape[-2]).max(axis=0)
    return float(np.max(per_alpha * ratio / denom))


def time_continuity_report(traj: FlowTrajectory, M: WeightSequence | None = None, sigma: float = 1.0,
                           times=None) -> list[ContinuityRow]:
    """Compare ``||phi(t) - phi(r)||^M_sigma`` with ``int_r^t g``.

    ``g(s)`` is the same truncated seminorm of the transported integrand
    ``Jet(u(s, .)) o Jet(Phi(s, .))``, so the inequality is the triangle
    inequality for the integral defining ``phi``.
    """
    M = M or WeightSequence.constant(max(traj.order, 2))
    d, K = traj.points.shape[1], traj.order
    times = traj.sample_times() if times is None else np.asarray(times)

    def g(s):
        J = traj.jets(s)
        U = traj.field.jets(s, J.value, K)
        return _jet_seminorm(jet_compose(U, J).coeffs, d, K, M, sigma)

    cuts = sorted({w.t1 for w in traj.windows} | set(traj.field.breakpoints))
    rows = []
    for r, t in zip(times[:-1], times[1:]):
        diff = traj.jets(t).coeffs - traj.jets(r).coeffs
        lhs = _jet_seminorm(diff, d, K, M, sigma)
        rhs = time_integral(g, float(r), float(t), cuts)
        rows.append(ContinuityRow(float(r), float(t), lhs, rhs))
    return rows
