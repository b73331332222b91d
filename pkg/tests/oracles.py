"""Independent reference computations used by the test-suite.

Nothing here imports the code paths under test for the quantity it checks.
"""

from __future__ import annotations

import itertools
import math
import random
from fractions import Fraction

import numpy as np
import sympy as sp


def graded_lex(d, K):
    out = []
    for n in range(K + 1):
        out.extend(
            sorted(
                (a for a in itertools.product(range(n + 1), repeat=d) if sum(a) == n),
                reverse=True,
            )
        )
    return out


def random_poly(symbols, degree, rng: random.Random, num: int = 6):
    terms = 0
    for a in itertools.product(range(degree + 1), repeat=len(symbols)):
        if sum(a) > degree or rng.random() < 0.4:
            continue
        c = Fraction(rng.randint(-num, num), rng.randint(1, 4))
        terms += sp.Rational(c.numerator, c.denominator) * sp.Mul(*[s**e for s, e in zip(symbols, a)])
    return sp.sympify(terms)


def _truncate(poly: sp.Poly, K: int) -> sp.Poly:
    return sp.Poly.from_dict({m: c for m, c in poly.as_dict().items() if sum(m) <= K}, *poly.gens)


def taylor_coeffs(expr, symbols, point, K):
    """Exact normalized Taylor coefficients of a polynomial expression at ``point``."""
    h = sp.symbols(f"h0:{len(symbols)}")
    shifted = sp.Poly(sp.expand(expr.subs(dict(zip(symbols, [p + hi for p, hi in zip(point, h)])))), *h)
    coeffs = shifted.as_dict()
    return [coeffs.get(a, sp.Integer(0)) for a in graded_lex(len(symbols), K)]


def composed_taylor(f_exprs, ys, g_exprs, xs, x0, K):
    """Normalized Taylor coefficients of ``f o g`` at ``x0``, truncated at ``K``.

    Expands with exact rationals, truncating total degree after every product.
    """
    h = sp.symbols(f"h0:{len(xs)}")
    k = sp.symbols(f"k0:{len(ys)}")
    sub_x = dict(zip(xs, [p + hi for p, hi in zip(x0, h)]))
    g0 = [ge.subs(dict(zip(xs, x0))) for ge in g_exprs]
    incr = [_truncate(sp.Poly(sp.expand(ge.subs(sub_x)) - g0i, *h), K) for ge, g0i in zip(g_exprs, g0)]
    out = []
    for fe in f_exprs:
        fshift = sp.Poly(sp.expand(fe.subs(dict(zip(ys, [g + ki for g, ki in zip(g0, k)])))), *k)
        total = sp.Poly(0, *h)
        for mono, c in fshift.as_dict().items():
            term = sp.Poly(c, *h)
            for j, e in enumerate(mono):
                for _ in range(e):
                    term = _truncate(term * incr[j], K)
            total = total + term
        dd = total.as_dict()
        out.append([dd.get(a, sp.Integer(0)) for a in graded_lex(len(xs), K)])
    return np.array(out, dtype=float).T


def count_fdb_terms(gamma, m):
    """Size of the Faà di Bruno index set via a generating-function recursion.

    Counts multisets of distinct nonzero parts ``delta`` with multiplicity
    ``n``, each weighted by the number ``C(n+m-1, m-1)`` of ways to split
    ``n`` into ``k in N^m``.
    """
    gamma = tuple(gamma)
    parts = [
        a
        for a in itertools.product(*[range(g + 1) for g in gamma])
        if any(a)
    ]
    # dp over parts: poly dict {vector: count}
    dp = {tuple(0 for _ in gamma): 1}
    for delta in parts:
        new = dict(dp)
        for vec, cnt in dp.items():
            n = 1
            while True:
                tgt = tuple(v + n * a for v, a in zip(vec, delta))
                if any(t > g for t, g in zip(tgt, gamma)):
                    break
                new[tgt] = new.get(tgt, 0) + cnt * math.comb(n + m - 1, m - 1)
                n += 1
        dp = new
    return dp.get(gamma, 0)


def central_difference(fn, x, h, axis):
    e = np.zeros_like(x)
    e[..., axis] = h
    return (fn(x + e) - fn(x - e)) / (2 * h)
