"""Multivariate Faà di Bruno formula on normalized jets.

For ``f: R^m -> R^n`` and ``g: R^d -> R^m`` and ``gamma != 0``::

    d^gamma(f o g)/gamma! = sum alpha!/(k_1!...k_l!) * (d^alpha f/alpha!)(g)
                            * prod_i (d^delta_i g/delta_i!)^k_i

summed over sets of distinct nonzero ``delta_i`` in ``N^d`` and tuples of
nonzero ``k_i`` in ``N^m`` with ``gamma = sum |k_i| delta_i``, where
``alpha = k_1 + ... + k_l`` and powers/factorials of ``k_i`` are taken
componentwise over the ``m`` components of ``g``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import multiindex as mi
from .jet import JetMismatchError, JetPoly

# cap on (batch chunk) x (plan terms) x (factor slots) per numpy call
_CHUNK_BUDGET = 4_000_000


@dataclass(frozen=True)
class FdBPartition:
    """One index set of the Faà di Bruno sum.

    ``blocks`` holds pairs ``(delta_i, k_i)``; ``delta_i`` live in
    ``N^d`` (pairwise distinct, nonzero) and ``k_i`` in ``N^m \\ {0}``.
    """

    blocks: tuple[tuple[mi.MultiIndex, mi.MultiIndex], ...]
    target: mi.MultiIndex

    @property
    def alpha(self) -> mi.MultiIndex:
        m = len(self.blocks[0][1])
        return tuple(sum(k[j] for _, k in self.blocks) for j in range(m))

    @property
    def coefficient(self) -> float:
        denom = math.prod(mi.factorial(k) for _, k in self.blocks)
        return mi.factorial(self.alpha) / denom


def _vector_partitions(gamma: mi.MultiIndex):
    """Multisets of distinct nonzero parts with multiplicities summing to gamma."""
    d = len(gamma)
    cands = [
        delta
        for delta in mi.enumerate_multiindices(d, sum(gamma))
        if any(delta) and all(a <= b for a, b in zip(delta, gamma))
    ]

    def rec(start, remaining):
        if not any(remaining):
            yield ()
            return
        for idx in range(start, len(cands)):
            delta = cands[idx]
            n = 1
            while all(n * a <= r for a, r in zip(delta, remaining)):
                rest = tuple(r - n * a for a, r in zip(delta, remaining))
                for tail in rec(idx + 1, rest):
                    yield ((delta, n),) + tail
                n += 1

    yield from rec(0, tuple(gamma))


@lru_cache(maxsize=None)
def _partitions(gamma: mi.MultiIndex, m: int) -> tuple[FdBPartition, ...]:
    out = []
    for parts in _vector_partitions(gamma):
        choices = [mi.compositions(n, m) for _, n in parts]
        for ks in _product(choices):
            out.append(FdBPartition(tuple((delta, k) for (delta, _), k in zip(parts, ks)), gamma))
    return tuple(out)


def _product(lists):
    if not lists:
        yield ()
        return
    for head in lists[0]:
        for tail in _product(lists[1:]):
            yield (head,) + tail


def enumerate_fdb_partitions(gamma, m: int) -> list[FdBPartition]:
    """Index sets of the Faà di Bruno sum for target ``gamma`` and ``g`` with ``m`` components."""
    gamma = tuple(int(g) for g in gamma)
    if not any(gamma):
        raise ValueError("faà di bruno needs nonzero target")
    if m < 1:
        raise ValueError("m must be >= 1")
    return list(_partitions(gamma, m))


@dataclass(frozen=True)
class _Plan:
    f_index: np.ndarray  # (P,) position of alpha in f's layout
    coef: np.ndarray  # (P,)
    factors: np.ndarray  # (P, K) flat indices into g coeffs, padded with "one"
    scatter: np.ndarray  # (P, n_terms) 0/1 target matrix


@lru_cache(maxsize=None)
def compose_plan(d: int, m: int, K: int) -> _Plan:
    """Flattened term list for composing order-``K`` jets ``R^d -> R^m -> R^n``."""
    g_pos = mi.index_map(d, K)
    f_pos = mi.index_map(m, K)
    one = mi.n_terms(d, K) * m
    f_index, coef, factors, targets = [], [], [], []
    for t, gamma in enumerate(mi.enumerate_multiindices(d, K)):
        if t == 0:
            continue
        for part in _partitions(gamma, m):
            slots = []
            for delta, k in part.blocks:
                for j, kj in enumerate(k):
                    slots.extend([g_pos[delta] * m + j] * kj)
            slots.extend([one] * (K - len(slots)))
            f_index.append(f_pos[part.alpha])
            coef.append(part.coefficient)
            factors.append(slots)
            targets.append(t)
    P = len(coef)
    scatter = np.zeros((P, mi.n_terms(d, K)))
    scatter[np.arange(P), targets] = 1.0
    return _Plan(
        np.array(f_index, dtype=int),
        np.array(coef, dtype=float),
        np.array(factors, dtype=int).reshape(P, K),
        scatter,
    )


def jet_compose(f: JetPoly, g: JetPoly) -> JetPoly:
    """Jet of ``f o g`` at ``g``'s basepoint.

    ``f`` must be expanded at ``g``'s value. Both jets share the truncation
    order; batch axes broadcast.
    """
    if f.order != g.order:
        raise JetMismatchError(f"order mismatch: {f.order} vs {g.order}")
    if f.dim_in != g.dim_out:
        raise JetMismatchError(f"f expects {f.dim_in} inputs but g has {g.dim_out} outputs")
    gv = g.value.real if np.iscomplexobj(g.coeffs) else g.value
    fb, gv = np.broadcast_arrays(f.basepoint, gv)
    if not np.allclose(fb, gv, rtol=1e-9, atol=1e-9):
        raise JetMismatchError("basepoint mismatch: f must be expanded at g's value")

    d, m, K = g.dim_in, g.dim_out, g.order
    batch = np.broadcast_shapes(f.batch_shape, g.batch_shape)
    fc = np.broadcast_to(f.coeffs, batch + f.coeffs.shape[-2:]).reshape((-1,) + f.coeffs.shape[-2:])
    gc = np.broadcast_to(g.coeffs, batch + g.coeffs.shape[-2:]).reshape(-1, mi.n_terms(d, K) * m)
    n = f.dim_out
    dtype = np.result_type(fc, gc)
    out = np.zeros((fc.shape[0], mi.n_terms(d, K), n), dtype=dtype)
    out[:, 0, :] = fc[:, 0, :]
    if K > 0:
        plan = compose_plan(d, m, K)
        B = fc.shape[0]
        step = max(1, _CHUNK_BUDGET // max(1, plan.factors.size))
        for lo in range(0, B, step):
            hi = min(B, lo + step)
            gflat = np.concatenate([gc[lo:hi], np.ones((hi - lo, 1), dtype=gc.dtype)], axis=1)
            prods = gflat[:, plan.factors].prod(axis=-1) * plan.coef
            fv = fc[lo:hi, plan.f_index, :]
            out[lo:hi] += np.einsum("bp,bpn,pt->btn", prods, fv, plan.scatter)
    base = np.broadcast_to(g.basepoint, batch + (d,))
    return JetPoly(out.reshape(batch + out.shape[1:]), base, K)


def jet_inverse(a: JetPoly) -> JetPoly:
    """Jet of the local inverse of a square map.

    Given the jet of ``Phi`` at ``y`` (value ``x``), returns the jet of
    ``Phi^{-1}`` at ``x`` by fixed-point iteration on the truncated
    identity ``Phi o Phi^{-1} = Id``; each sweep fixes one more order.
    """
    if a.dim_in != a.dim_out:
        raise JetMismatchError("only square jets can be inverted")
    d, K = a.dim_in, a.order
    x = a.value.real
    lin = a.jacobian().real
    lin_inv = np.linalg.inv(lin)
    b = JetPoly.identity(x, K)
    # first-order guess: y + L^{-1}(h)
    coeffs = np.zeros(b.coeffs.shape)
    coeffs[..., 0, :] = a.basepoint
    if K >= 1:
        coeffs[..., 1 : 1 + d, :] = np.swapaxes(lin_inv, -1, -2)
    b = JetPoly(coeffs, x, K)
    for _ in range(K):
        comp = jet_compose(a, b)
        resid = comp.coeffs - JetPoly.identity(x, K).coeffs
        correction = np.einsum("...ij,...tj->...ti", lin_inv, resid)
        b = JetPoly(b.coeffs - correction, x, K)
    return b
