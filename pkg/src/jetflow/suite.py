"""Acceptance checks bundled as callables.

Each ``check_*`` function returns a :class:`Check`. The CLI ``suite``
subcommand runs them in order; the test-suite calls the same functions
(with an exact symbolic oracle substituted for the first one).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .bergman import (
    cauchy_integral_constant,
    extend_S,
    gaussian_corpus,
    inclusion_verify,
    ode_closedness_demo,
    restrict_R,
)
from .catalog import Profile, TimeProfile
from .continuity import perturbation_slope, probe_corpus, run_corpus
from .flow import (
    SeparableField,
    concat_fields,
    det_jacobian_min,
    pick_delta,
    reverse_field,
    solve_flow,
)
from .group import DiffeoRep, polygon_generator, refine_polygon, trouve_generator
from .jets import JetPoly, childress_check, jet_compose
from .sequences import WeightSequence, regularity_report
from .spaces import (
    GridSpec,
    SampledFunction,
    gelfand_shilov_seminorm,
    sobolev_embedding_check,
    sobolev_norm,
    ultradiff_seminorm,
)


@dataclass
class Check:
    criterion: int
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        shown = ", ".join(f"{k}={_fmt(v)}" for k, v in self.detail.items())
        return f"[{status}] criterion {self.criterion:2d} {self.name}: {shown}"

    def row(self) -> dict:
        return {"criterion": self.criterion, "name": self.name, "passed": self.passed, **self.detail}


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.3e}"
    return str(v)


X0 = np.linspace(-3, 3, 20)[:, None]
SIN = SeparableField(Profile("sin", 1))


def sin_exact(x0, t):
    return 2 * np.arctan(np.exp(t) * np.tan(x0 / 2))


# -- 1: Faà di Bruno ------------------------------------------------------------------


def random_polynomial_pairs(n: int = 50, seed: int = 0, d_max: int = 3, degree_max: int = 5, K_max: int = 6):
    """``(g, f, x0, K)`` with ``g: R^d -> R^m`` and ``f: R^m -> R`` as ``{exponent: coeff}`` dicts.

    Coefficients are small dyadic rationals, so the polynomials are exact in
    floating point.
    """
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        d = int(rng.integers(1, d_max + 1))
        m = int(rng.integers(1, d_max + 1))
        deg_g = int(rng.integers(1, degree_max + 1))
        deg_f = int(rng.integers(1, degree_max + 1))
        K = int(rng.integers(1, K_max + 1))
        g = [_random_poly(rng, d, deg_g) for _ in range(m)]
        f = [_random_poly(rng, m, deg_f)]
        x0 = rng.integers(-4, 5, size=d) / 8.0
        out.append((g, f, x0, K))
    return out


def _random_poly(rng, n_vars: int, degree: int) -> dict:
    terms = {}
    for a in itertools.product(range(degree + 1), repeat=n_vars):
        if sum(a) <= degree and rng.random() < 0.6:
            terms[a] = float(rng.integers(-8, 9)) / 4.0
    return terms or {(0,) * n_vars: 1.0}


def poly_on_jets(poly: dict, args: list[JetPoly]) -> JetPoly:
    """Evaluate a polynomial on jets with plain jet products."""
    out = 0.0 * args[0]
    for expo, c in poly.items():
        term = c + 0.0 * args[0]
        for a, e in zip(args, expo):
            for _ in range(e):
                term = term * a
        out = out + term
    return out


def fdb_pair_error(g: list[dict], f: list[dict], x0: np.ndarray, K: int) -> float:
    """Largest coefficient gap between ``jet_compose`` and the directly multiplied composite."""
    xj = JetPoly.identity(x0[None, :], K)
    gj = JetPoly.stack([poly_on_jets(gi, xj.components()) for gi in g])
    y = JetPoly.identity(gj.value, K)
    fj = JetPoly.stack([poly_on_jets(fi, y.components()) for fi in f])
    direct = JetPoly.stack([poly_on_jets(fi, gj.components()) for fi in f])
    return float(np.max(np.abs(jet_compose(fj, gj).coeffs - direct.coeffs)))


def check_fdb(n: int = 50, seed: int = 0, tol: float = 1e-10) -> Check:
    worst = max((fdb_pair_error(*case) for case in random_polynomial_pairs(n, seed)), default=0.0)
    return Check(1, "Faa di Bruno composition", worst <= tol, {"pairs": n, "max_err": worst, "tol": tol})


# -- 2, 3: Picard windows and sin flow -----------------------------------------------------


def check_contraction(tol: float = 0.55) -> Check:
    w = pick_delta(SIN, rho=1.0, M=WeightSequence.constant())
    traj = solve_flow(SIN, X0, 1, rho=1.0)
    decay = max(traj.decay_factors())
    ok = w.contraction_value <= 0.5 and decay <= tol
    return Check(2, "contraction rule", ok, {"delta": w.delta, "contraction": w.contraction_value, "decay": decay})


def check_sin_flow(tol: float = 1e-8) -> Check:
    traj = solve_flow(SIN, X0, 1)
    err = max(float(np.max(np.abs(traj.flow(t) - sin_exact(X0, t)))) for t in (0.25, 0.5, 1.0))
    return Check(3, "sin flow closed form", err <= tol, {"max_err": err, "tol": tol})


# -- 4, 5: group laws and determinants ---------------------------------------------------


def field_pairs() -> list[tuple[SeparableField, SeparableField]]:
    """Five pairs of admissible fields in one dimension."""
    cos = TimeProfile("cosine", {"c0": 1.0, "c1": 0.5})
    step = TimeProfile("step", {"cuts": [0.5], "values": [1.0, -0.5]})
    sep = lambda kind, t=None, **p: SeparableField(Profile(kind, 1, params=p), t)  # noqa: E731
    return [
        (sep("gaussian", amplitude=0.8), sep("sin_gauss", amplitude=0.7)),
        (SIN, sep("tanh", amplitude=0.5)),
        (sep("x_gauss", cos, amplitude=1.2), sep("gaussian", amplitude=-0.6, center=0.5)),
        (sep("sin_gauss", step, amplitude=0.9, width=1.5), sep("x_gauss", amplitude=-0.8)),
        (sep("tanh", cos, amplitude=-0.7), sep("sin", amplitude=0.4)),
    ]


def check_group_laws(tol: float = 1e-6) -> tuple[Check, list[float]]:
    worst_w, worst_rev, dets = 0.0, 0.0, []
    for u, v in field_pairs():
        tu = solve_flow(u, X0, 1)
        there = tu.flow(1.0)
        tv = solve_flow(v, there, 1)
        tw = solve_flow(concat_fields(u, v), X0, 1)
        back = solve_flow(reverse_field(u), there, 1)
        worst_w = max(worst_w, float(np.max(np.abs(tw.flow(1.0) - tv.flow(1.0)))))
        worst_rev = max(worst_rev, float(np.max(np.abs(back.flow(1.0) - X0))))
        dets += [det_jacobian_min(t) for t in (tu, tv, tw, back)]
    ok = worst_w <= tol and worst_rev <= tol
    return Check(4, "group laws", ok, {"concat_err": worst_w, "reverse_err": worst_rev, "tol": tol}), dets


def check_det_positivity(dets: list[float] | None = None, margin: float = 0.1) -> Check:
    """Every run above has positive Jacobian; the bundled pairs stay above ``margin``."""
    if dets is None:
        _, dets = check_group_laws()
    dets = dets + [det_jacobian_min(solve_flow(SIN, X0, 1))]
    lo = min(dets)
    return Check(5, "det positivity", lo > margin, {"runs": len(dets), "min_det": lo, "margin": margin})


# -- 6: Trouvé round trip --------------------------------------------------------------------


TROUVE_GRID = GridSpec(1, 6.0, 121)


def small_diffeos(grid: GridSpec = TROUVE_GRID) -> list[DiffeoRep]:
    specs = [
        ("gaussian", {"amplitude": 0.3}),
        ("tanh", {"amplitude": 0.5}),
        ("x_gauss", {"amplitude": 0.4}),
        ("sin_gauss", {"amplitude": 0.5, "width": 1.5}),
        ("gaussian", {"amplitude": -0.45, "width": 0.8, "center": 0.5}),
    ]
    return [DiffeoRep.from_profile(grid, Profile(k, 1, params=p), 2) for k, p in specs]


def check_trouve(tol_small: float = 1e-6, tol_large: float = 1e-5) -> Check:
    small_err, dphi = 0.0, 0.0
    for P in small_diffeos():
        dphi = max(dphi, P.dphi_sup())
        traj = solve_flow(trouve_generator(P), X0, 1)
        small_err = max(small_err, float(np.max(np.abs(traj.flow(1.0) - P(X0)))))
    big = DiffeoRep.from_profile(TROUVE_GRID, Profile("x_gauss", 1, params={"amplitude": 1.6}), 2)
    verts = [DiffeoRep.identity(TROUVE_GRID)] + refine_polygon(big)
    large_err = float(np.max(np.abs(solve_flow(polygon_generator(verts), X0, 0).flow(1.0) - big(X0))))
    ok = dphi <= 0.5 and small_err <= tol_small and large_err <= tol_large and len(verts) == 3
    return Check(6, "Trouve round trip", ok,
                 {"small_err": small_err, "large_err": large_err, "vertices": len(verts), "dphi_sup": dphi})


# -- 7: Gronwall ----------------------------------------------------------------------------


def check_gronwall(results=None, seed: int = 0, jobs: int = 1, slope_tol: float = 0.1) -> Check:
    if results is None:
        results = run_corpus(probe_corpus(seed), jobs=jobs)
    failed = [r.probe for r in results if not r.holds]
    u = SeparableField(Profile("sin_gauss", 1, params={"amplitude": 0.6}))
    w = SeparableField(Profile("gaussian", 1, params={"center": 0.5}))
    slope, _ = perturbation_slope(u, w, 1, 2.0, GridSpec(1, 6.0, 121))
    ok = not failed and abs(slope - 1.0) <= slope_tol
    return Check(7, "Gronwall bounds", ok, {"probes": len(results), "failed": failed or "none", "slope": slope})


# -- 8: Bergman inclusions ------------------------------------------------------------------------


def check_inclusions(tol_roundtrip: float = 1e-10, tol_cauchy: float = 1e-6) -> Check:
    rep = inclusion_verify(gaussian_corpus(), r=1.0, p=2.0, sigma=0.5, rho=2.0)
    grid = GridSpec(1, 6.0, 61, "gauss-legendre")
    f = SampledFunction.from_closed_form(grid, Profile("gaussian", 1, 1), 12)
    back = restrict_R(extend_S(f, 1.0, 0.5), 2.0, 1.5, 3).f
    rt = float(np.max(np.abs(back.values - f.values)))
    cauchy = cauchy_integral_constant((1,), 1.0).value
    ok = rep.bounded and rt <= tol_roundtrip and abs(cauchy - math.pi) <= tol_cauchy
    return Check(8, "Bergman inclusions", ok, {
        "ratio_S": rep.max_ratio_S, "C_S": rep.C_S, "ratio_R": rep.max_ratio_R, "C_R": rep.C_R,
        "roundtrip_err": rt, "cauchy_err": abs(cauchy - math.pi),
    })


# -- 9: sequences --------------------------------------------------------------------------------


def check_sequences(n_max: int = 8) -> Check:
    one, gev = regularity_report(WeightSequence.constant()), regularity_report(WeightSequence.gevrey(1.0))
    ok_one = one.regular and not one.strictly_regular and one.quasianalytic_trend == "diverging"
    ok_gev = gev.regular and gev.strictly_regular and gev.quasianalytic_trend == "converging"
    ch = all(childress_check(M, n).holds for M in (WeightSequence.constant(), WeightSequence.gevrey(1.0))
             for n in range(1, n_max + 1))
    return Check(9, "weight sequences", ok_one and ok_gev and ch,
                 {"constant": ok_one, "gevrey1": ok_gev, "childress": ch})


# -- 10: seminorms --------------------------------------------------------------------------------


SEMINORM_CORPUS = [
    Profile("gaussian", 1),
    Profile("gaussian", 1, params={"width": 0.5, "center": 1.0}),
    Profile("sin_gauss", 1, params={"width": 2.0}),
    Profile("x_gauss", 1),
    Profile("bump", 1, params={"radius": 2.0}),
]


def check_seminorms(tol: float = 1e-6, sigmas=(0.25, 0.5, 1.0, 2.0, 4.0), K: int = 6) -> Check:
    one = WeightSequence.constant(12)
    grid = GridSpec(1, 6.0, 121)
    sigma_ok = trunc_ok = embed_ok = True
    for prof in SEMINORM_CORPUS:
        f = SampledFunction.from_closed_form(grid, prof, K)
        for p in (1.0, 2.0, math.inf):
            vals = [ultradiff_seminorm(f, one, s, p, K) for s in sigmas]
            sigma_ok &= all(b <= a * (1 + 1e-12) for a, b in zip(vals, vals[1:]))
        gs = [gelfand_shilov_seminorm(f, one, one, s, 3, 4) for s in sigmas]
        sigma_ok &= all(b <= a * (1 + 1e-12) for a, b in zip(gs, gs[1:]))
        tr = [ultradiff_seminorm(f, one, 1.0, 2.0, k) for k in range(K + 1)]
        trunc_ok &= all(b >= a for a, b in zip(tr, tr[1:]))
        emb = sobolev_embedding_check(f, 2.0)
        embed_ok &= emb.k == 1 and math.isfinite(emb.ratio)
    fine = SampledFunction.from_closed_form(GridSpec(1, 8.0, 257), Profile("gaussian", 1), 0)
    gauss = sobolev_norm(fine, 0, 2.0)
    err = abs(gauss - (math.pi / 2) ** 0.25)
    ok = sigma_ok and trunc_ok and embed_ok and err <= tol
    return Check(10, "seminorm sanity", ok,
                 {"sigma_monotone": sigma_ok, "K_monotone": trunc_ok, "embedding": embed_ok, "gauss_err": err})


# -- 11: ODE closedness --------------------------------------------------------------------------------


def check_closedness() -> Check:
    u = SeparableField(Profile("sin_gauss", 1, params={"amplitude": 0.3}),
                       TimeProfile("cosine", {"c0": 1.0, "c1": 0.5}))
    rep = ode_closedness_demo(u)
    return Check(11, "ODE closedness", rep.finite and rep.shrinking, {
        "max_norm": max(r.norm for r in rep.rows), "steps": [f"{v:.2e}" for _, v in rep.steps],
        "max_tail": rep.max_tail,
    })


def run_suite(criteria=None, *, seed: int = 0, jobs: int = 1, tol: dict | None = None,
              log: Callable[[str], None] | None = None) -> list[Check]:
    """Run the selected criteria (default all) and return their checks in order."""
    tol = tol or {}
    wanted = set(criteria or range(1, 12))
    out: list[Check] = []
    dets = None

    def emit(c: Check):
        out.append(c)
        if log:
            log(c.line())

    if 1 in wanted:
        emit(check_fdb(seed=seed, tol=tol.get("fdb", 1e-10)))
    if 2 in wanted:
        emit(check_contraction())
    if 3 in wanted:
        emit(check_sin_flow(tol.get("flow", 1e-8)))
    if 4 in wanted or 5 in wanted:
        laws, dets = check_group_laws(tol.get("group", 1e-6))
        if 4 in wanted:
            emit(laws)
    if 5 in wanted:
        emit(check_det_positivity(dets))
    if 6 in wanted:
        emit(check_trouve(tol.get("trouve", 1e-6), tol.get("trouve_large", 1e-5)))
    if 7 in wanted:
        emit(check_gronwall(seed=seed, jobs=jobs))
    if 8 in wanted:
        emit(check_inclusions(tol.get("roundtrip", 1e-10)))
    if 9 in wanted:
        emit(check_sequences())
    if 10 in wanted:
        emit(check_seminorms(tol.get("seminorm", 1e-6)))
    if 11 in wanted:
        emit(check_closedness())
    return out
