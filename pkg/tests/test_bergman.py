import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from jetflow.bergman import (
    BergmanFunction,
    Polystrip,
    PreconditionError,
    bergman_norm,
    bergman_norm_report,
    cauchy_derivatives,
    cauchy_integral_constant,
    extend_S,
    extension_constant,
    gaussian_corpus,
    inclusion_verify,
    interior_sup_bound,
    interior_sweep,
    ode_closedness_demo,
    real_defect,
    restrict_R,
    restriction_bound,
    width_ladder,
    zero_function,
)
from jetflow.catalog import Profile, TimeProfile
from jetflow.flow import SeparableField, concat_fields, reverse_field, zero_field
from jetflow.spaces import GridSpec, SampledFunction

STRIP = Polystrip(1, 1.0)
GAUSS = Profile("gaussian", 1, 1)


def gauss_fn(width=1.0, strip=STRIP):
    return BergmanFunction.from_profile(strip, Profile("gaussian", 1, 1, {"width": width}))


# -- norms ---------------------------------------------------------------------


def test_zero_norm():
    assert bergman_norm(zero_function(STRIP), 2.0) == 0.0


def test_gaussian_norm_against_separable_oracle():
    # |exp(-z^2)|^2 = exp(-2x^2) exp(2y^2) separates
    ix, _ = integrate.quad(lambda x: math.exp(-2 * x * x), -np.inf, np.inf)
    iy, _ = integrate.quad(lambda y: math.exp(2 * y * y), -1, 1)
    assert bergman_norm(gauss_fn(), 2.0) == pytest.approx(math.sqrt(ix * iy), rel=1e-10)


def test_gaussian_sup_norm():
    # |exp(-z^2)| = exp(y^2 - x^2) peaks at the innermost x and outermost y node
    x = np.abs(STRIP.x.axis()[0]).min()
    y = np.abs(STRIP.y_nodes()[0]).max()
    assert bergman_norm(gauss_fn(), math.inf) == pytest.approx(math.exp(y * y - x * x), rel=1e-14)


def test_norm_monotone_in_width_and_extent():
    F = gauss_fn()
    ladder = width_ladder(F, 2.0, 4)
    norms = [n for _, n in ladder]
    assert all(a > b for a, b in zip(norms, norms[1:]))
    small = Polystrip(1, 1.0, GridSpec(1, 1.0, 64, "gauss-legendre"))
    assert bergman_norm(F, 2.0, small) < bergman_norm(F, 2.0)


def test_tail_warning_for_slow_decay():
    slow = BergmanFunction(STRIP, lambda z: 1 / (z * z + 4.0))
    rep = bergman_norm_report(slow, 2.0)
    assert rep.tail_warning and rep.edge > 1e-3
    assert not bergman_norm_report(gauss_fn(), 2.0).tail_warning


def test_real_on_reals():
    assert real_defect(gauss_fn()) < 1e-12
    F = BergmanFunction.from_profile(STRIP, Profile("sin_gauss", 1, 1, {"phase": 0.3}))
    assert real_defect(F) < 1e-12


# -- interior bound ----------------------------------------------------------------


def test_interior_bound_zero():
    assert interior_sup_bound(zero_function(STRIP), 0.5, 2.0).sup_inner == 0.0


@pytest.mark.parametrize("p", [1.0, 2.0, 4.0])
@pytest.mark.parametrize("width", [0.7, 1.0, 2.0])
def test_interior_bound_mean_value_constant(p, width):
    b = interior_sup_bound(gauss_fn(width), 0.5, p)
    assert 0 < b.ratio and b.holds


def test_interior_ratio_grows_towards_boundary():
    rows, slope = interior_sweep(gauss_fn(), [0.2, 0.4, 0.6, 0.8], 2.0)
    ratios = [b.ratio for b in rows]
    assert all(a < b for a, b in zip(ratios, ratios[1:]))
    assert slope < 0


# -- extension ---------------------------------------------------------------------

GRID = GridSpec(1, 6.0, 61, "gauss-legendre")


def test_extension_on_real_axis_is_exact():
    f = SampledFunction.from_closed_form(GRID, GAUSS, 14)
    ext = extend_S(f, 1.0, 0.5)
    np.testing.assert_array_equal(ext(GRID.points().astype(complex)), f.values)


@pytest.mark.parametrize("y", [0.1, 0.3, 0.5, -0.5])
def test_extension_matches_closed_form(y):
    f = SampledFunction.from_closed_form(GRID, GAUSS, 12)
    ext = extend_S(f, 1.0, 0.5, K=12)
    z = GRID.points() + 1j * y
    err = np.abs(ext(z) - GAUSS(z)).max()
    assert err <= ext.truncation_bound([[y]]) + 1e-15


def test_extension_of_linear_map_terminates():
    lin = Profile("linear", 1, 1, {"matrix": [[1.0]]})
    f = SampledFunction.from_closed_form(GridSpec(1, 1.0, 5), lin, 3)
    ext = extend_S(f, 1.0, 0.5, K=3)
    z = f.points + 0.4j
    np.testing.assert_allclose(ext(z), z, atol=1e-15)


def test_extension_preconditions():
    f = SampledFunction.from_closed_form(GRID, GAUSS, 12)
    with pytest.raises(PreconditionError, match="seminorm precondition"):
        extend_S(f, 1.0, 1.2)
    ext = extend_S(f, 1.0, 0.5)
    with pytest.raises(ValueError, match="strip width"):
        ext(GRID.points() + 1.0j)


def test_extension_norm_within_constant():
    f = SampledFunction.from_closed_form(GRID, Profile("gaussian", 1, 1, {"width": 2.0}), 40)
    ext = extend_S(f, 1.0, 0.5, K=40)
    from jetflow.bergman import one_seminorm

    semi, _ = one_seminorm(f, 0.5 / 2, 2.0)
    assert bergman_norm(ext, 2.0) <= extension_constant(1.0, 0.5, 2.0) * semi


def test_extend_then_restrict_round_trip():
    f = SampledFunction.from_closed_form(GRID, GAUSS, 12)
    ext = extend_S(f, 1.0, 0.5)
    back = restrict_R(ext, 2.0, 1.5, 3).f
    assert np.max(np.abs(back.values - f.values)) <= 1e-10
    # derivatives come from contours through the truncated series
    np.testing.assert_allclose(back.jets.coeffs, f.jets.truncate(3).coeffs, atol=1e-6)


def test_restrict_then_extend_within_truncation():
    F = gauss_fn(strip=Polystrip(1, 1.0, GRID))
    f = restrict_R(F, 2.0, 1.5, 12).f
    ext = extend_S(f, 1.0, 0.5)
    for y in (0.2, 0.45):
        z = GRID.points() + 1j * y
        assert np.abs(ext(z) - F(z)).max() <= ext.truncation_bound([[y]])


# -- restriction ---------------------------------------------------------------------


def test_restriction_zero():
    R = restrict_R(zero_function(STRIP), 2.0, 1.5, 4)
    assert R.seminorm == 0.0 and R.holds


@pytest.mark.parametrize("p", [1.0, 2.0, math.inf])
def test_restriction_gaussian_bounds(p):
    R = restrict_R(gauss_fn(), p, 1.5, 8)
    assert R.holds
    assert all(row.holds for row in R.rows)
    assert 0 < R.C5_fit <= R.C5


def test_contour_derivatives_match_closed_form():
    F = gauss_fn(0.8, Polystrip(1, 1.0, GRID))
    J = cauchy_derivatives(F, GRID.points(), 10)
    np.testing.assert_allclose(J.coeffs, F.jets(GRID.points(), 10).coeffs, atol=1e-12)


def test_contour_derivatives_two_dimensional():
    g = GridSpec(2, 2.0, 5)
    F = BergmanFunction.from_profile(Polystrip(2, 1.0, g), Profile("gaussian", 2, 1))
    J = cauchy_derivatives(F, g.points(), 4, n=32)
    np.testing.assert_allclose(J.coeffs, F.jets(g.points(), 4).coeffs, atol=1e-12)


def test_restriction_constant_scales_like_inverse_width():
    rs = np.array([1.0, 0.5, 0.25, 0.125])
    for k in (1, 2, 4):
        vals = [restriction_bound((k,), r, math.inf) for r in rs]
        slope = np.polyfit(np.log(rs), np.log(vals), 1)[0]
        assert slope == pytest.approx(-k, abs=1e-3)
        vals2 = [restriction_bound((k,), r, 2.0) for r in rs]
        assert np.polyfit(np.log(rs), np.log(vals2), 1)[0] == pytest.approx(-k - 0.5, abs=1e-3)


# -- Cauchy integral constant -----------------------------------------------------------


def test_cauchy_integral_pi():
    res = cauchy_integral_constant((1,), 1.0)
    assert res.value == pytest.approx(math.pi, abs=1e-6)
    assert res.D == pytest.approx(math.pi, abs=1e-12) and res.holds


def test_cauchy_integral_product():
    assert cauchy_integral_constant((1, 1), (1.0, 1.0)).value == pytest.approx(math.pi**2, abs=1e-8)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.integers(1, 5), min_size=1, max_size=3), st.floats(0.2, 3.0), st.floats(0.5, 4.0))
def test_cauchy_integral_scaling(alpha, y, lam):
    ys = [y * (1 + 0.1 * i) for i in range(len(alpha))]
    base = cauchy_integral_constant(alpha, ys)
    scaled = cauchy_integral_constant(alpha, [lam * v for v in ys])
    assert scaled.value == pytest.approx(base.value * lam ** (-sum(alpha)), rel=1e-6)
    assert base.holds and scaled.holds


def test_cauchy_integral_rejects_zero_order():
    with pytest.raises(ValueError):
        cauchy_integral_constant((0,), 1.0)


# -- inclusions ------------------------------------------------------------------------


def test_inclusion_zero_function():
    rep = inclusion_verify([Profile("zero", 1, 1)], 1.0, 2.0, 0.5, 2.0, K_max=8)
    row = rep.rows[0]
    assert row.ratio_S == 0.0 and row.ratio_R == 0.0


@pytest.mark.parametrize("p", [2.0, math.inf])
def test_inclusion_gaussian_corpus_bounded(p):
    rep = inclusion_verify(gaussian_corpus(), 1.0, p, 0.5, 2.0)
    assert len(rep.rows) == 5
    assert rep.bounded
    assert all(r.settled_R for r in rep.rows)


# -- ODE closedness ----------------------------------------------------------------------


def analytic_field(a=0.3):
    return SeparableField(Profile("sin_gauss", 1, params={"amplitude": a}),
                          TimeProfile("cosine", {"c0": 1.0, "c1": 0.5}))


def test_closedness_zero_field():
    rep = ode_closedness_demo(zero_field(1), levels=(2, 4))
    assert all(r.norm == 0.0 for r in rep.rows)


def test_closedness_analytic_field():
    rep = ode_closedness_demo(analytic_field())
    assert rep.finite and rep.shrinking
    assert rep.max_tail < 1e-2
    assert rep.steps[-1][1] < 0.5 * rep.steps[0][1]


def test_closedness_reversal_round_trip():
    u = analytic_field()
    rep = ode_closedness_demo(concat_fields(u, reverse_field(u)), levels=(2, 4))
    assert rep.finite
    assert rep.rows[-1].norm < 1e-10
