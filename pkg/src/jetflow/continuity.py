"""Sobolev composition bounds and the Lipschitz estimate for the flow map.

The constants are obtained by replaying the inductive proofs step by step
for the norm used throughout the package,

    ||f||_{W^{k,p}} = max_i sum_{|alpha| <= k} ||d^alpha f_i||_{L^p},

which in one dimension coincides with the operator-norm version. The
dimension enters through two places in each induction step: the chain rule
sums over ``d`` intermediate components and the derivative ``d(g o Phi)``
has ``d`` partial derivatives. The product rule in ``W^{m,p}`` contributes
``2^m``.

Composition bound, for ``c <= det d(Id + f)``::

    C1(0) = c^(-1/p)
    C1(k) = c^(-1/p) + 2^(k-1) d^2 C1(k-1)
    ||g o (Id + f)||_{W^{k,p}} <= C1(k) ||g||_{W^{k,p}} (1 + ||f||_{W^{k,inf}})^k

Difference bound::

    D(0) = d
    D(k) = d + 2^(k-1) d^2 (D(k-1) + C1_inf(k-1))
    ||g o (Id+f1) - g o (Id+f2)||_{W^{k,p}}
        <= D(k) ||g||_{W^{k+1,inf}} (1 + max_i ||f_i||_{W^{k,inf}})^k ||f1 - f2||_{W^{k,p}}

where ``C1_inf`` is ``C1`` at ``p = inf`` (independent of ``c``). With
``F = sup_s max(||phi_u(s)||, ||phi_v(s)||)_{W^{k,inf}}`` the Gronwall
argument for ``e(t) = ||phi_u(t) - phi_v(t)||_{W^{k,p}}`` gives

    e(t) <= C_1 ||u - v||_{L^1 W^{k,p}} exp(C_2 ||u||_{L^1 W^{k+1,inf}})

with ``C_1 = C1(k) (1 + F)^k`` and ``C_2 = D(k) (1 + F)^k``.

All norms are grid estimates, so every check compares quantities computed
on the same grid.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .catalog import Profile, TimeProfile
from .flow import SeparableField, SumField, TimeDependentField, solve_flow
from .flow.solver import time_integral
from .jets import JetPoly, jet_compose
from .spaces import GridSpec, SampledFunction, sobolev_norm

REL_TOL = 1e-9


def _inv_root(c: float, p: float) -> float:
    return 1.0 if math.isinf(p) else c ** (-1.0 / p)


def composition_constant(k: int, c: float, p: float, d: int = 1) -> float:
    """``C1(k)`` by replaying the induction on ``k``."""
    if not c > 0:
        raise ValueError("determinant lower bound c must be positive")
    base = _inv_root(c, p)
    C = base
    for j in range(1, k + 1):
        C = base + 2 ** (j - 1) * d * d * C
    return C


def difference_constant(k: int, d: int = 1) -> float:
    """``D(k)`` by replaying the induction on ``k``."""
    D = float(d)
    for j in range(1, k + 1):
        D = d + 2 ** (j - 1) * d * d * (D + composition_constant(j - 1, 1.0, math.inf, d))
    return D


def gronwall_constant(C1: float, C2: float, u_norm: float) -> float:
    """``C_3 = C_1 exp(C_2 ||u||_{L^1 W^{k+1,inf}})``; ``inf`` past float range."""
    log_c3 = log_gronwall_constant(C1, C2, u_norm)
    return math.exp(log_c3) if log_c3 < 709 else math.inf


def log_gronwall_constant(C1: float, C2: float, u_norm: float) -> float:
    """Natural logarithm of ``C_3``, finite even when ``C_3`` overflows."""
    return math.log(C1) + C2 * u_norm


@dataclass(frozen=True)
class BoundCheck:
    lhs: float
    rhs: float
    constant: float
    c: float

    @property
    def holds(self) -> bool:
        return bool(self.lhs <= self.rhs * (1 + REL_TOL))

    @property
    def slack(self) -> float:
        return self.rhs / self.lhs if self.lhs > 0 else math.inf


def _det_lower(f: SampledFunction, c: float | None) -> float:
    if f.order < 1:
        raise ValueError("f needs jets of order >= 1 to bound det d(Id + f)")
    J = JetPoly.identity(f.points, 1) + f.jets.truncate(1)
    det_min = float(np.linalg.det(J.jacobian()).min())
    if c is None:
        c = det_min
    if not c > 0 or det_min < c:
        raise ValueError(f"det d(Id + f) reaches {det_min:.6g}, below the lower bound c = {c:.6g}")
    return c


def _compose_sampled(g: SampledFunction, f: SampledFunction, k: int) -> SampledFunction:
    """Jets of ``g o (Id + f)`` to order ``k`` at ``f``'s grid nodes."""
    if g.closed_form is None:
        raise ValueError("g needs a closed form to be evaluated off its grid")
    if f.order < k:
        raise ValueError(f"f carries jets of order {f.order} < {k}")
    Phi = JetPoly.identity(f.points, k) + f.jets.truncate(k)
    outer = g.closed_form(JetPoly.identity(Phi.value, k))
    return SampledFunction(f.grid, jet_compose(outer, Phi))


def composition_norm_bound(g: SampledFunction, f: SampledFunction, k: int, p: float,
                           c: float | None = None) -> BoundCheck:
    """Check ``||g o (Id + f)||_{W^{k,p}} <= C1(k) ||g||_{W^{k,p}} (1 + ||f||_{W^{k,inf}})^k``.

    Parameters
    ----------
    g : SampledFunction
        Outer map; its ``closed_form`` is evaluated at the displaced nodes.
    f : SampledFunction
        Displacement, with jets of order ``max(k, 1)``.
    c : float, optional
        Lower bound for ``det d(Id + f)``; defaults to the grid minimum.

    Raises
    ------
    ValueError
        If the determinant drops below ``c``.
    """
    c = _det_lower(f, c)
    lhs = sobolev_norm(_compose_sampled(g, f, k), k, p)
    C = composition_constant(k, c, p, f.grid.d)
    rhs = C * sobolev_norm(g, k, p) * (1 + sobolev_norm(f, k, math.inf)) ** k
    return BoundCheck(lhs, rhs, C, c)


def composition_diff_bound(g: SampledFunction, f1: SampledFunction, f2: SampledFunction, k: int, p: float,
                           c: float | None = None) -> BoundCheck:
    """Check the difference bound for ``g o (Id + f1) - g o (Id + f2)``.

    ``g`` must carry jets of order ``k + 1``.
    """
    c1 = _det_lower(f1, c)
    c2 = _det_lower(f2, c)
    diff = _compose_sampled(g, f1, k).jets - _compose_sampled(g, f2, k).jets
    lhs = sobolev_norm(SampledFunction(f1.grid, diff), k, p)
    D = difference_constant(k, f1.grid.d)
    F = max(sobolev_norm(f1, k, math.inf), sobolev_norm(f2, k, math.inf))
    df = SampledFunction(f1.grid, f1.jets.truncate(k) - f2.jets.truncate(k))
    rhs = D * sobolev_norm(g, k + 1, math.inf) * (1 + F) ** k * sobolev_norm(df, k, p)
    return BoundCheck(lhs, rhs, D, min(c1, c2))


# -- flow-map continuity ---------------------------------------------------------


def field_slice(u: TimeDependentField, s: float, grid: GridSpec, order: int) -> SampledFunction:
    """``u(s, .)`` on ``grid`` with a closed form usable at any jet."""

    def closed(X: JetPoly) -> JetPoly:
        return jet_compose(u.jets(s, X.value, X.order), X)

    return SampledFunction(grid, u.jets(s, grid.points(), order), closed)


def flow_displacement(traj, t: float, grid: GridSpec, order: int) -> SampledFunction:
    """``phi(t) = Phi(t) - Id`` on ``grid`` as a sampled function."""
    J = traj.jets(t).truncate(order)
    return SampledFunction(grid, J - JetPoly.identity(grid.points(), order))


@dataclass(frozen=True)
class GronwallReport:
    """Constants and measurements for one pair of fields.

    ``C_lemma1`` and ``C_lemma2`` are the replayed induction constants,
    ``C1, C2, C3`` the Gronwall constants, ``measured_ratio`` the observed
    ``sup_t ||phi_u - phi_v||_{W^{k,p}} / ||u - v||_{L^1 W^{k,p}}``.
    """

    k: int
    p: float
    c: float
    C_lemma1: float
    C_lemma2: float
    F: float
    C1: float
    C2: float
    C3: float
    log10_C3: float
    u_norm: float
    diff_norm: float
    sup_diff: float
    measured_ratio: float

    @property
    def holds(self) -> bool:
        if self.measured_ratio == 0.0:
            return True
        return bool(math.log10(self.measured_ratio) <= self.log10_C3 + REL_TOL)

    def row(self) -> dict:
        out = asdict(self)
        out["holds"] = self.holds
        return out


def _breakpoints(*fields) -> tuple[float, ...]:
    return tuple(sorted({b for f in fields for b in f.breakpoints}))


def flow_map_lipschitz(u: TimeDependentField, v: TimeDependentField, k: int, p: float, grid: GridSpec,
                       *, n_times: int = 16, time_pieces: int = 4, trajectories=None,
                       **solver_kw) -> GronwallReport:
    """Measured Lipschitz ratio of ``u -> phi_u`` against the Gronwall constant.

    Parameters
    ----------
    u, v : TimeDependentField
        The two fields, integrated over ``[0, 1]``.
    k, p : int, float
        Sobolev order and exponent.
    grid : GridSpec
        Nodes carrying the flows and every norm.
    n_times : int
        Uniform time samples for the supremum over ``t``.
    trajectories : tuple, optional
        Precomputed ``(traj_u, traj_v)`` on ``grid.points()`` with order
        ``>= max(k, 1)``.
    """
    order = max(k, 1)
    pts = grid.points()
    if trajectories is None:
        tu = solve_flow(u, pts, order, **solver_kw)
        tv = tu if v is u else solve_flow(v, pts, order, **solver_kw)
    else:
        tu, tv = trajectories
    times = np.linspace(0.0, 1.0, n_times + 1)
    sup_diff, F, c = 0.0, 0.0, math.inf
    for t in times:
        fu = flow_displacement(tu, t, grid, order)
        fv = flow_displacement(tv, t, grid, order)
        F = max(F, sobolev_norm(fu, k, math.inf), sobolev_norm(fv, k, math.inf))
        c = min(c, float(tu.jacobian_det(t).min()), float(tv.jacobian_det(t).min()))
        diff = SampledFunction(grid, fu.jets.truncate(k) - fv.jets.truncate(k))
        sup_diff = max(sup_diff, sobolev_norm(diff, k, p))
    if not c > 0:
        raise ValueError(f"flow determinant reached {c:.6g}; no positive lower bound")
    bps = _breakpoints(u, v)

    def diff_norm_at(s):
        J = u.jets(s, pts, k) - v.jets(s, pts, k)
        return sobolev_norm(SampledFunction(grid, J), k, p)

    def u_norm_at(s):
        return sobolev_norm(SampledFunction(grid, u.jets(s, pts, k + 1)), k + 1, math.inf)

    diff_norm = 0.0 if v is u else time_integral(diff_norm_at, 0.0, 1.0, bps, pieces=time_pieces)
    u_norm = time_integral(u_norm_at, 0.0, 1.0, bps, pieces=time_pieces)
    L1 = composition_constant(k, c, p, grid.d)
    L2 = difference_constant(k, grid.d)
    C1 = L1 * (1 + F) ** k
    C2 = L2 * (1 + F) ** k
    C3 = gronwall_constant(C1, C2, u_norm)
    if diff_norm == 0.0:
        ratio = 0.0 if sup_diff <= 1e-14 else math.inf
    else:
        ratio = sup_diff / diff_norm
    log10_C3 = log_gronwall_constant(C1, C2, u_norm) / math.log(10)
    return GronwallReport(k, p, c, L1, L2, F, C1, C2, C3, log10_C3, u_norm, diff_norm, sup_diff, ratio)


def perturbation_slope(u: TimeDependentField, w: TimeDependentField, k: int, p: float, grid: GridSpec,
                       eps=(1e-1, 1e-2, 1e-3), **solver_kw) -> tuple[float, list[float]]:
    """Log-log slope of ``sup_t ||phi_{u + eps w} - phi_u||_{W^{k,p}}`` in ``eps``."""
    order = max(k, 1)
    pts = grid.points()
    tu = solve_flow(u, pts, order, **solver_kw)
    diffs = []
    for e in eps:
        v = SumField([u, w.scaled(e)])
        tv = solve_flow(v, pts, order, **solver_kw)
        rep = flow_map_lipschitz(u, v, k, p, grid, trajectories=(tu, tv), n_times=8)
        diffs.append(rep.sup_diff)
    slope = float(np.polyfit(np.log(eps), np.log(diffs), 1)[0])
    return slope, diffs


# -- probe corpus ----------------------------------------------------------------


@dataclass(frozen=True)
class Probe:
    name: str
    u: TimeDependentField
    v: TimeDependentField
    k: int
    p: float
    grid: GridSpec


PROBE_GRIDS = {1: GridSpec(1, 6.0, 121), 2: GridSpec(2, 4.5, 31)}
PROBE_ORDERS = [(1, 0, 2.0), (1, 1, 2.0), (1, 2, 2.0), (1, 3, 2.0), (1, 1, math.inf), (1, 3, math.inf),
                (2, 0, math.inf), (2, 1, 2.0), (2, 2, 2.0), (2, 1, math.inf)]


def probe_corpus(seed: int = 0) -> list[Probe]:
    """Ten field pairs (six in one dimension, four in two) with fixed randomness.

    ``u`` is a time-modulated ``sin x_1 exp(-|x|^2/w^2)`` field and ``v``
    adds a small Gaussian bump to it.
    """
    rng = np.random.default_rng(seed)
    out = []
    for i, (d, k, p) in enumerate(PROBE_ORDERS):
        amp = rng.uniform(0.3, 0.9, size=d) * rng.choice([-1, 1], size=d)
        width = float(rng.uniform(0.9, 1.6))
        tp = TimeProfile("cosine", {"c0": 1.0, "c1": float(rng.uniform(0.1, 0.5)), "freq": 1.0})
        u = SeparableField(Profile("sin_gauss", d, params={"amplitude": amp.tolist(), "width": width,
                                                           "phase": float(rng.uniform(-1, 1))}), tp)
        bump = Profile("gaussian", d, params={"amplitude": rng.uniform(-0.15, 0.15, size=d).tolist(),
                                              "width": float(rng.uniform(0.7, 1.3)),
                                              "center": rng.uniform(-1, 1, size=d).tolist()})
        v = SumField([u, SeparableField(bump)])
        pname = "inf" if math.isinf(p) else f"{p:g}"
        out.append(Probe(f"probe{i}-d{d}-k{k}-p{pname}", u, v, k, p, PROBE_GRIDS[d]))
    return out


@dataclass(frozen=True)
class ProbeResult:
    probe: str
    norm_check: BoundCheck
    diff_check: BoundCheck
    report: GronwallReport

    @property
    def holds(self) -> bool:
        return self.norm_check.holds and self.diff_check.holds and self.report.holds

    def row(self) -> dict:
        r = self.report
        return {
            "probe": self.probe, "k": r.k, "p": r.p,
            "lhs": self.norm_check.lhs, "rhs": self.norm_check.rhs,
            "diff_lhs": self.diff_check.lhs, "diff_rhs": self.diff_check.rhs,
            "C3": r.C3, "log10_C3": r.log10_C3, "measured_ratio": r.measured_ratio, "holds": self.holds,
        }


def run_probe(probe: Probe, n_times: int = 16) -> ProbeResult:
    """Both composition bounds at ``t = 1`` and the flow-map estimate for one pair."""
    k, p, grid = probe.k, probe.p, probe.grid
    order = max(k, 1)
    pts = grid.points()
    tu = solve_flow(probe.u, pts, order)
    tv = solve_flow(probe.v, pts, order)
    g = field_slice(probe.u, 0.5, grid, k + 1)
    fu = flow_displacement(tu, 1.0, grid, order)
    fv = flow_displacement(tv, 1.0, grid, order)
    l1 = composition_norm_bound(g, fv, k, p)
    l2 = composition_diff_bound(g, fu, fv, k, p)
    rep = flow_map_lipschitz(probe.u, probe.v, k, p, grid, trajectories=(tu, tv), n_times=n_times)
    return ProbeResult(probe.name, l1, l2, rep)


def run_corpus(probes: list[Probe], jobs: int = 1, n_times: int = 16) -> list[ProbeResult]:
    """Run every probe; ``jobs > 1`` spreads pairs over processes."""
    if jobs <= 1 or len(probes) < 2:
        return [run_probe(pr, n_times) for pr in probes]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(run_probe, probes, [n_times] * len(probes)))
