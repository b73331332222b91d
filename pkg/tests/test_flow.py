import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from jetflow.catalog import Profile, TimeProfile
from jetflow.flow import (
    AdmissibilityError,
    FlowError,
    PicardWindow,
    SeparableField,
    TimeDependentField,
    concat_fields,
    det_jacobian_min,
    flow_jet_transport,
    flow_residual,
    glue_flow,
    pick_delta,
    picard_solve_window,
    plan_windows,
    reverse_field,
    solve_flow,
    time_continuity_report,
    zero_field,
)
from jetflow.jets import JetPoly

SIN = SeparableField(Profile("sin", 1))
X0 = np.linspace(-3, 3, 20)[:, None]


def sin_exact(x0, t):
    return 2 * np.arctan(np.exp(t) * np.tan(x0 / 2))


def gauss_field(amp=0.8, width=1.0, center=0.0, time=None):
    return SeparableField(Profile("gaussian", 1, params={"amplitude": amp, "width": width, "center": center}), time)


@pytest.fixture(scope="module")
def sin_traj():
    return solve_flow(SIN, X0, 2)


# -- contraction windows -----------------------------------------------------


def test_pick_delta_zero_field():
    w = pick_delta(zero_field(1))
    assert w.delta == 1.0 and w.contraction_value == 0.0


def test_pick_delta_sin():
    w = pick_delta(SIN)
    assert w.delta == 0.5 and w.contraction_value <= 0.5


def test_pick_delta_scaling_quarters():
    assert pick_delta(SIN.scaled(4.0)).delta == pytest.approx(pick_delta(SIN).delta / 4)


def test_pick_delta_respects_breakpoints():
    u = SeparableField(Profile("gaussian", 1), TimeProfile("step", {"values": [0.1, 0.2], "cuts": [0.3]}))
    w = pick_delta(u)
    assert w.t1 == pytest.approx(0.3)
    assert [round(w.t1, 12) for w in plan_windows(u)] == [0.3, 1.0]


class _Exploding(TimeDependentField):
    d = 1

    def values(self, t, x):
        return np.full(np.shape(x), 1e308)

    def jets(self, t, points, order):
        return JetPoly.constant(np.full(np.shape(points), 1e308), points, order)


def test_pick_delta_non_admissible():
    with pytest.raises(AdmissibilityError, match="not admissible"):
        pick_delta(_Exploding())


# -- window fixed points ------------------------------------------------------


def test_constant_field_one_step():
    u = SeparableField(Profile("constant", 1, params={"value": 0.7}))
    w = PicardWindow(0.0, 1.0, 1.0, 1.0, 0.0)
    sol = picard_solve_window(u, w, X0, 1)
    assert sol.changes[1] == 0.0
    for t in (0.3, 1.0):
        np.testing.assert_allclose(sol.local_jets(t).value - X0, 0.7 * t, atol=1e-14)


def test_window_matches_closed_form():
    x0 = np.array([[np.pi / 2]])
    sol = picard_solve_window(SIN, pick_delta(SIN), x0, 1)
    for t in np.linspace(0, 0.5, 7):
        assert abs(sol.local_jets(t).value[0, 0] - sin_exact(np.pi / 2, t)) <= 1e-8


def test_iteration_decay_below_half(sin_traj):
    factors = sin_traj.decay_factors()
    assert factors and max(factors) <= 0.5
    for sol, _ in sin_traj.segments:
        assert all(f <= sol.window.contraction_value + 1e-12 for f in sol.decay_factors())


def test_nonconvergence_raises():
    w = PicardWindow(0.0, 1.0, 1.0, 1.0, 4.0)
    with pytest.raises(FlowError, match="did not converge"):
        picard_solve_window(SIN.scaled(4.0), w, X0, 1, max_iter=3)


# -- glued flows ---------------------------------------------------------------


@pytest.mark.parametrize("t", [0.25, 0.5, 1.0])
def test_sin_flow_closed_form(sin_traj, t):
    assert np.max(np.abs(sin_traj.flow(t) - sin_exact(X0, t))) <= 1e-8


def test_phi_zero_at_start(sin_traj):
    assert np.all(sin_traj.phi(0.0) == 0.0)


def test_single_window_equals_window_solve():
    w = PicardWindow(0.0, 1.0, 1.0, 1.0, 0.3)
    u = gauss_field(0.3)
    traj = glue_flow(u, [w], X0, 1)
    sol = picard_solve_window(u, w, X0, 1)
    np.testing.assert_array_equal(traj.jets(0.6).coeffs, sol.local_jets(0.6).coeffs)


def test_partition_independence():
    a = solve_flow(SIN, X0, 1, delta=0.25)
    b = solve_flow(SIN, X0, 1, delta=0.5)
    assert len(a.windows) == 4 and len(b.windows) == 2
    for t in (0.3, 0.75, 1.0):
        assert np.max(np.abs(a.flow(t) - b.flow(t))) <= 1e-8


def test_broken_chain():
    ws = [PicardWindow(0.0, 0.5, 1, 1, 0.1), PicardWindow(0.6, 0.4, 1, 1, 0.1)]
    with pytest.raises(FlowError, match="chain broken"):
        glue_flow(SIN, ws, X0)


def test_autonomous_group_property():
    u = gauss_field(0.9, 1.5)
    s, t = 0.35, 0.5
    at_t = solve_flow(u, X0, 0, t_end=t).flow(t)
    composed = solve_flow(u, at_t, 0, t_end=s).flow(s)
    direct = solve_flow(u, X0, 0, t_end=s + t).flow(s + t)
    assert np.max(np.abs(composed - direct)) <= 1e-6


# -- jets ---------------------------------------------------------------------


def test_zero_field_identity_jets():
    traj = solve_flow(zero_field(1), X0, 3)
    jets = flow_jet_transport(traj, 3, [0.5, 1.0])
    for J in jets.values():
        np.testing.assert_array_equal(J.coeffs, JetPoly.identity(X0, 3).coeffs)
    assert det_jacobian_min(traj) == 1.0
    assert flow_residual(traj) == 0.0


def test_transport_order_too_high(sin_traj):
    with pytest.raises(ValueError):
        flow_jet_transport(sin_traj, 3)


def test_derivative_matches_finite_difference():
    h = 1e-3
    x = np.array([[-1.0], [0.2], [1.3]])
    traj = solve_flow(SIN, x, 1)
    plus = solve_flow(SIN, x + h, 0).flow(1.0)
    minus = solve_flow(SIN, x - h, 0).flow(1.0)
    fd = (plus - minus) / (2 * h)
    np.testing.assert_allclose(traj.jets(1.0).jacobian()[:, 0, 0], fd[:, 0], atol=1e-5)


def test_higher_jets_match_closed_form():
    x = np.array([[0.4], [1.1]])
    traj = solve_flow(SIN, x, 3)
    J = traj.jets(1.0)
    # closed form derivatives of 2 arctan(e tan(x/2)) via finite differences of the closed form
    e = math.e
    d1 = lambda x0: e / (np.cos(x0 / 2) ** 2 * (1 + (e * np.tan(x0 / 2)) ** 2))
    np.testing.assert_allclose(J.derivative((1,))[:, 0], d1(x[:, 0]), rtol=1e-9)
    h = 1e-4
    d2 = (d1(x[:, 0] + h) - d1(x[:, 0] - h)) / (2 * h)
    np.testing.assert_allclose(J.derivative((2,))[:, 0], d2, rtol=1e-6)


def test_linear_field_matrix_exponential():
    A = np.array([[0.2, -0.5], [0.4, 0.1]])
    u = SeparableField(Profile("linear", 2, params={"matrix": A.tolist()}))
    pts = np.array([[0.0, 0.0], [1.0, -2.0], [3.0, 0.5]])
    traj = solve_flow(u, pts, 2)
    for t in (0.5, 1.0):
        J = traj.jets(t)
        np.testing.assert_allclose(J.jacobian(), np.broadcast_to(expm(t * A), (3, 2, 2)), atol=1e-10)
        assert np.max(np.abs(J.coeffs[:, 3:, :])) <= 1e-10


def test_grid_finite_difference_second_order():
    errs = []
    for n in (41, 81, 161):
        x = np.linspace(-2, 2, n)[:, None]
        traj = solve_flow(gauss_field(0.8), x, 1)
        phi = traj.flow(1.0)[:, 0]
        h = x[1, 0] - x[0, 0]
        fd = (phi[2:] - phi[:-2]) / (2 * h)
        errs.append(np.max(np.abs(fd - traj.jets(1.0).jacobian()[1:-1, 0, 0])))
    slopes = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(slopes >= 1.9)


# -- residual and determinants --------------------------------------------------


def test_residual_converged(sin_traj):
    assert flow_residual(sin_traj) <= 1e-8


def test_truncated_iteration_residual():
    full = solve_flow(SIN, X0, 0)
    w = full.windows
    r0 = flow_residual(glue_flow(SIN, w, X0, 0, max_iter=0, strict=False))
    r2 = flow_residual(glue_flow(SIN, w, X0, 0, max_iter=2, strict=False))
    assert r2 <= 0.5**2 * r0
    assert flow_residual(full) <= 10 * full.tol


def test_det_positive_and_chain_rule():
    u, v = gauss_field(0.8), SeparableField(Profile("sin_gauss", 1, params={"amplitude": 0.7}))
    tu = solve_flow(u, X0, 1)
    assert det_jacobian_min(tu) > 0
    tv = solve_flow(v, tu.flow(1.0), 1)
    tw = solve_flow(concat_fields(u, v), X0, 1)
    np.testing.assert_allclose(tw.jacobian_det(1.0), tv.jacobian_det(1.0) * tu.jacobian_det(1.0), rtol=1e-8)


def test_two_dimensional_flow():
    prof = Profile("gaussian", 2, params={"amplitude": [0.6, -0.4], "width": 1.2, "center": [0.3, 0.0]})
    u = SeparableField(prof, TimeProfile("cosine", {"c0": 1.0, "c1": 0.5}))
    g = np.stack(np.meshgrid(np.linspace(-2, 2, 7), np.linspace(-2, 2, 7)), -1).reshape(-1, 2)
    traj = solve_flow(u, g, 2)
    assert det_jacobian_min(traj) > 0.1
    assert flow_residual(traj) <= 1e-8


# -- surgery ----------------------------------------------------------------------


def test_concat_with_zero():
    u = gauss_field(0.8)
    target = solve_flow(u, X0, 0).flow(1.0)
    assert np.max(np.abs(solve_flow(concat_fields(u, zero_field()), X0, 0).flow(1.0) - target)) <= 1e-10
    assert np.max(np.abs(solve_flow(concat_fields(zero_field(), u), X0, 0).flow(1.0) - target)) <= 1e-10


def test_concat_is_composition():
    u, v = gauss_field(0.8), gauss_field(-0.5, 0.7, 1.0)
    phi_u = solve_flow(u, X0, 0).flow(1.0)
    phi_vu = solve_flow(v, phi_u, 0).flow(1.0)
    w1 = solve_flow(concat_fields(u, v), X0, 0).flow(1.0)
    assert np.max(np.abs(w1 - phi_vu)) <= 1e-6


def test_reverse_inverts():
    u = SeparableField(Profile("sin_gauss", 1, params={"amplitude": 1.2}), TimeProfile("affine", {"c0": 0.5, "c1": 1.0}))
    there = solve_flow(u, X0, 0).flow(1.0)
    back = solve_flow(reverse_field(u), there, 0).flow(1.0)
    assert np.max(np.abs(back - X0)) <= 1e-6


def test_double_reversal():
    u = gauss_field(0.8)
    assert reverse_field(reverse_field(u)) is u
    t, x = np.array([0.2, 0.7]), np.array([[0.1], [1.0]])
    np.testing.assert_array_equal(reverse_field(zero_field()).values(t, x), 0.0)
    np.testing.assert_allclose(reverse_field(u).values(1 - t, x), -u.values(t, x))


def test_time_continuity(sin_traj):
    rows = time_continuity_report(sin_traj)
    assert rows and all(r.lhs <= r.rhs * (1 + 1e-8) + 1e-12 for r in rows)


@settings(max_examples=8, deadline=None)
@given(amp=st.floats(-1.5, 1.5), width=st.floats(0.5, 2.0), center=st.floats(-1.0, 1.0))
def test_gaussian_runs_are_admissible(amp, width, center):
    traj = solve_flow(gauss_field(amp, width, center), X0, 1)
    assert det_jacobian_min(traj) > 0
    assert all(w.contraction_value <= 0.5 for w in traj.windows)
    assert flow_residual(traj, times=[0.5, 1.0]) <= 10 * traj.tol
