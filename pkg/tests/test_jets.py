import math
import random

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from jetflow.jets import (
    JetMismatchError,
    JetPoly,
    enumerate_fdb_partitions,
    enumerate_multiindices,
    jet_arith,
    jet_compose,
    jet_inverse,
)
from jetflow.jets import multiindex as mi

from oracles import composed_taylor, count_fdb_terms, graded_lex, random_poly, taylor_coeffs


def sympy_jet(exprs, symbols, point, K):
    cols = [taylor_coeffs(e, symbols, point, K) for e in exprs]
    coeffs = np.array(cols, dtype=float).T
    return JetPoly(coeffs, np.array(point, dtype=float), K)


# -- multi-indices ------------------------------------------------------------


def test_enumerate_univariate():
    assert enumerate_multiindices(1, 2) == [(0,), (1,), (2,)]


def test_enumerate_two_dims_order_one():
    assert enumerate_multiindices(2, 1) == [(0, 0), (1, 0), (0, 1)]


@pytest.mark.parametrize("d,K", [(3, 4), (1, 0), (2, 6), (4, 3)])
def test_enumeration_complete(d, K):
    got = enumerate_multiindices(d, K)
    assert len(got) == math.comb(K + d, d)
    assert len(set(got)) == len(got)
    assert got == graded_lex(d, K)


@pytest.mark.parametrize("d,K", [(1, 8), (2, 6), (3, 5)])
def test_multinomial_bound(d, K):
    for alpha in enumerate_multiindices(d, K):
        n = sum(alpha)
        assert math.factorial(n) <= d**n * mi.factorial(alpha)


# -- partitions ---------------------------------------------------------------


def test_partitions_gamma_one():
    parts = enumerate_fdb_partitions((1,), 1)
    assert len(parts) == 1
    assert parts[0].blocks == (((1,), (1,)),)


def test_partitions_gamma_two():
    parts = {p.blocks for p in enumerate_fdb_partitions((2,), 1)}
    assert parts == {(((1,), (2,)),), (((2,), (1,)),)}


def test_partitions_mixed_target():
    parts = {frozenset(p.blocks) for p in enumerate_fdb_partitions((1, 1), 1)}
    assert parts == {
        frozenset({((1, 1), (1,))}),
        frozenset({((1, 0), (1,)), ((0, 1), (1,))}),
    }


def test_partitions_reject_zero_target():
    with pytest.raises(ValueError, match="nonzero target"):
        enumerate_fdb_partitions((0, 0), 1)


@pytest.mark.parametrize("d", [1, 2, 3])
@pytest.mark.parametrize("m", [1, 2])
def test_partition_counts_match_generating_function(d, m):
    for gamma in enumerate_multiindices(d, 6 if d < 3 else 5):
        if not any(gamma):
            continue
        parts = enumerate_fdb_partitions(gamma, m)
        assert len(parts) == count_fdb_terms(gamma, m)
        for p in parts:
            deltas = [delta for delta, _ in p.blocks]
            assert len(set(deltas)) == len(deltas)
            total = tuple(sum(sum(k) * delta[i] for delta, k in p.blocks) for i in range(d))
            assert total == gamma


# -- composition --------------------------------------------------------------


def test_compose_with_identity_returns_f():
    rng = np.random.default_rng(0)
    K, d = 4, 2
    f = JetPoly(rng.normal(size=(mi.n_terms(d, K), 3)), np.array([0.3, -0.1]), K)
    g = JetPoly.identity(np.array([0.3, -0.1]), K)
    np.testing.assert_allclose(jet_compose(f, g).coeffs, f.coeffs, atol=1e-15)


def test_compose_square_of_shift():
    f = JetPoly(np.array([[1.0], [2.0], [1.0]]), np.array([1.0]), 2)  # y^2 at y=1
    g = JetPoly(np.array([[1.0], [1.0], [0.0]]), np.array([0.0]), 2)  # 1 + x at 0
    np.testing.assert_allclose(jet_compose(f, g).coeffs.ravel(), [1.0, 2.0, 1.0])


def test_compose_matches_symbolic_expansion_d2_m2():
    rng = random.Random(11)
    xs = sp.symbols("x0:2")
    ys = sp.symbols("y0:2")
    K = 6
    g_exprs = [random_poly(xs, 5, rng) for _ in range(2)]
    f_exprs = [random_poly(ys, 5, rng)]
    x0 = [sp.Rational(1, 3), sp.Rational(-1, 2)]
    g0 = [ge.subs(dict(zip(xs, x0))) for ge in g_exprs]
    g = sympy_jet(g_exprs, xs, x0, K)
    f = sympy_jet(f_exprs, ys, g0, K)
    expected = composed_taylor(f_exprs, ys, g_exprs, xs, x0, K)
    np.testing.assert_allclose(jet_compose(f, g).coeffs, expected, atol=1e-10, rtol=1e-12)


def test_compose_rejects_basepoint_mismatch():
    f = JetPoly.identity(np.array([1.0]), 2)
    g = JetPoly.identity(np.array([0.0]), 2)
    with pytest.raises(JetMismatchError, match="basepoint"):
        jet_compose(f, g)


def test_compose_rejects_order_mismatch():
    with pytest.raises(JetMismatchError, match="order"):
        jet_compose(JetPoly.identity(np.array([0.0]), 2), JetPoly.identity(np.array([0.0]), 3))


def _smooth_map(x):
    # R^2 -> R^2
    return np.stack([np.sin(x[..., 0]) * np.exp(-x[..., 1] ** 2), x[..., 0] * x[..., 1] + np.cos(x[..., 1])], -1)


def _outer(y):
    return np.exp(0.3 * y[..., 0]) * np.sin(y[..., 1])


def _jets_of(fn, point, K):
    x = JetPoly.identity(point, K)
    comps = x.components()
    if fn is _smooth_map:
        return JetPoly.stack([np.sin(comps[0]) * np.exp(-(comps[1] * comps[1])), comps[0] * comps[1] + np.cos(comps[1])])
    return np.exp(0.3 * comps[0]) * np.sin(comps[1])


def test_compose_matches_finite_differences():
    x0 = np.array([0.4, -0.2])
    K = 4
    g = _jets_of(_smooth_map, x0, K)
    f = _jets_of(_outer, g.value, K)
    h = jet_compose(f, g)

    def comp(x):
        return _outer(_smooth_map(x))

    # first and second derivatives against nested central differences
    eps = 1e-4
    for i in range(2):
        fd = (comp(x0 + eps * np.eye(2)[i]) - comp(x0 - eps * np.eye(2)[i])) / (2 * eps)
        assert abs(h.derivative(tuple(np.eye(2, dtype=int)[i]))[0] - fd) <= 1e-6 * max(1, abs(fd))
    eps = 1e-3
    e0, e1 = eps * np.eye(2)
    fd_mixed = (comp(x0 + e0 + e1) - comp(x0 + e0 - e1) - comp(x0 - e0 + e1) + comp(x0 - e0 - e1)) / (4 * eps**2)
    assert abs(h.derivative((1, 1))[0] - fd_mixed) <= 1e-6 * max(1, abs(fd_mixed))
    # higher orders: finite differences of the exact first-order jets of the composite
    for gamma in [(2, 1), (1, 2), (3, 1), (2, 2)]:
        base = (gamma[0] - 1, gamma[1]) if gamma[0] > 0 else (gamma[0], gamma[1] - 1)
        axis = 0 if gamma[0] > 0 else 1
        step = 1e-4

        def lower(x):
            gg = _jets_of(_smooth_map, x, K)
            return jet_compose(_jets_of(_outer, gg.value, K), gg).derivative(base)[0]

        fd = (lower(x0 + step * np.eye(2)[axis]) - lower(x0 - step * np.eye(2)[axis])) / (2 * step)
        exact = h.derivative(gamma)[0]
        assert abs(exact - fd) <= 1e-6 * max(1.0, abs(exact))


def _random_cubic_jet(rng, d_in, d_out, point, K):
    coeffs = np.zeros((mi.n_terms(d_in, K), d_out))
    n3 = mi.n_terms(d_in, 3)
    coeffs[:n3] = rng.uniform(-1, 1, size=(n3, d_out))
    return JetPoly(coeffs, point, K)


@given(st.integers(1, 3), st.integers(1, 3), st.integers(0, 10_000))
@settings(max_examples=20, deadline=None)
def test_compose_associative(d, K_off, seed):
    rng = np.random.default_rng(seed)
    K = 2 + K_off
    x0 = rng.uniform(-1, 1, d)
    h = _random_cubic_jet(rng, d, d, x0, K)
    g = _random_cubic_jet(rng, d, d, h.value, K)
    f = _random_cubic_jet(rng, d, 1, g.value, K)
    left = jet_compose(f, jet_compose(g, h))
    right = jet_compose(jet_compose(f, g), h)
    np.testing.assert_allclose(left.coeffs, right.coeffs, atol=1e-10, rtol=1e-10)


def test_jet_inverse_roundtrip():
    y = JetPoly.identity(np.array([[0.5], [-1.2], [2.0]]), 7)
    phi = y + 0.3 * np.exp(-(y * y))
    inv = jet_inverse(phi)
    ident = JetPoly.identity(phi.value, 7)
    np.testing.assert_allclose(jet_compose(phi, inv).coeffs, ident.coeffs, atol=1e-12)


def test_elementary_functions_match_closed_derivatives():
    x = JetPoly.identity(np.array([0.7]), 6)
    s = np.sin(x)
    expected = [math.sin(0.7 + k * math.pi / 2) / math.factorial(k) for k in range(7)]
    np.testing.assert_allclose(s.coeffs.ravel(), expected, atol=1e-15)
    t = np.tanh(x)
    # tanh' = 1 - tanh^2, tanh'' = -2 tanh (1 - tanh^2)
    th = math.tanh(0.7)
    np.testing.assert_allclose(t.derivative((1,))[0], 1 - th**2, atol=1e-14)
    np.testing.assert_allclose(t.derivative((2,))[0], -2 * th * (1 - th**2), atol=1e-14)
    r = (x + 1.0).reciprocal()
    np.testing.assert_allclose(r.coeffs.ravel(), [(-1) ** k / 1.7 ** (k + 1) for k in range(7)], rtol=1e-13)


# -- arithmetic ---------------------------------------------------------------


def test_add_zero():
    a = JetPoly(np.arange(6.0).reshape(6, 1), np.array([0.1, 0.2]), 2)
    zero = JetPoly(np.zeros((6, 1)), np.array([0.1, 0.2]), 2)
    np.testing.assert_array_equal(jet_arith(a, zero, "add").coeffs, a.coeffs)


def test_mul_conjugate_pair():
    x = JetPoly.identity(np.array([0.0]), 2)
    prod = jet_arith(1.0 + x, 1.0 - x, "mul")
    np.testing.assert_allclose(prod.coeffs.ravel(), [1.0, 0.0, -1.0])


def test_mul_matches_symbolic_product():
    rng = random.Random(5)
    xs = sp.symbols("x0:3")
    a_expr, b_expr = random_poly(xs, 4, rng), random_poly(xs, 4, rng)
    pt = [sp.Rational(1, 2), sp.Rational(-1, 3), sp.Rational(2, 5)]
    K = 5
    a = sympy_jet([a_expr], xs, pt, K)
    b = sympy_jet([b_expr], xs, pt, K)
    expected = sympy_jet([sp.expand(a_expr * b_expr)], xs, pt, K)
    np.testing.assert_allclose(jet_arith(a, b, "mul").coeffs, expected.coeffs, atol=1e-11)


def test_arith_mismatch():
    a = JetPoly.identity(np.array([0.0]), 2)
    b = JetPoly.identity(np.array([0.0]), 3)
    with pytest.raises(JetMismatchError):
        jet_arith(a, b, "add")
    with pytest.raises(JetMismatchError):
        jet_arith(a, JetPoly.identity(np.array([1.0]), 2), "mul")


def test_batched_arithmetic_matches_pointwise():
    pts = np.linspace(-1, 1, 7)[:, None]
    x = JetPoly.identity(pts, 5)
    batched = np.exp(-x * x) * np.sin(3 * x)
    for i, p in enumerate(pts):
        single = np.exp(-JetPoly.identity(p, 5) ** 2) * np.sin(3 * JetPoly.identity(p, 5))
        np.testing.assert_allclose(batched[i].coeffs, single.coeffs, atol=1e-14)


# -- serialization ------------------------------------------------------------


def test_json_roundtrip():
    x = JetPoly.identity(np.array([0.2, 0.4]), 3)
    jet = JetPoly.stack([np.sin(x.component(0)) * x.component(1), np.exp(x.component(1))])
    back = JetPoly.from_json(jet.to_json())
    np.testing.assert_array_equal(back.coeffs, jet.coeffs)
    np.testing.assert_array_equal(back.basepoint, jet.basepoint)
    assert back.order == 3


def test_json_layout_graded_lex():
    import json

    jet = JetPoly.identity(np.array([1.0, 2.0]), 1)
    obj = json.loads(jet.to_json())
    assert [c[0] for c in obj["coeffs"]] == [[0, 0], [1, 0], [0, 1]]
    assert obj["dim_in"] == 2 and obj["dim_out"] == 2 and obj["order"] == 1
