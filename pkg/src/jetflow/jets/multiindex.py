"""Multi-index bookkeeping for truncated Taylor expansions.

Multi-indices are plain tuples of nonnegative ints. All enumerations use
graded-lexicographic order: by total order first, then lexicographically
descending inside one degree, so ``(1, 0)`` comes before ``(0, 1)``.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Sequence

import numpy as np

MultiIndex = tuple[int, ...]


def order(alpha: Sequence[int]) -> int:
    return int(sum(alpha))


def factorial(alpha: Sequence[int]) -> int:
    return math.prod(math.factorial(a) for a in alpha)


def _compositions(n: int, d: int):
    # compositions of n into d nonnegative parts, first entry descending
    if d == 1:
        yield (n,)
        return
    for first in range(n, -1, -1):
        for rest in _compositions(n - first, d - 1):
            yield (first,) + rest


@lru_cache(maxsize=None)
def _enumerate(d: int, K: int) -> tuple[MultiIndex, ...]:
    out: list[MultiIndex] = []
    for n in range(K + 1):
        out.extend(_compositions(n, d))
    return tuple(out)


def enumerate_multiindices(d: int, K: int) -> list[MultiIndex]:
    """All multi-indices in ``N^d`` of order at most ``K``, graded-lex.

    >>> enumerate_multiindices(2, 1)
    [(0, 0), (1, 0), (0, 1)]
    """
    if d < 1 or K < 0:
        raise ValueError(f"need d >= 1 and K >= 0, got d={d}, K={K}")
    return list(_enumerate(d, K))


def compositions(n: int, d: int) -> list[MultiIndex]:
    """All ``k`` in ``N^d`` with ``|k| = n``, in the same order as above."""
    return list(_compositions(n, d))


def n_terms(d: int, K: int) -> int:
    return math.comb(K + d, d)


@lru_cache(maxsize=None)
def index_map(d: int, K: int) -> dict[MultiIndex, int]:
    return {alpha: i for i, alpha in enumerate(_enumerate(d, K))}


@lru_cache(maxsize=None)
def orders_array(d: int, K: int) -> np.ndarray:
    return np.array([sum(a) for a in _enumerate(d, K)], dtype=int)


@lru_cache(maxsize=None)
def factorials_array(d: int, K: int) -> np.ndarray:
    return np.array([factorial(a) for a in _enumerate(d, K)], dtype=float)


@lru_cache(maxsize=None)
def product_table(d: int, K: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Index triples ``(i, j, k)`` with ``alpha_i + alpha_j = alpha_k``.

    Returned as ``(I, J, T)`` where ``T`` is a dense 0/1 matrix of shape
    ``(len(I), n_terms)`` scattering pair products onto their target.
    """
    idx = _enumerate(d, K)
    pos = index_map(d, K)
    I, J, targets = [], [], []
    for i, a in enumerate(idx):
        for j, b in enumerate(idx):
            if sum(a) + sum(b) > K:
                continue
            I.append(i)
            J.append(j)
            targets.append(pos[tuple(x + y for x, y in zip(a, b))])
    T = np.zeros((len(I), len(idx)))
    T[np.arange(len(I)), targets] = 1.0
    return np.array(I), np.array(J), T


@lru_cache(maxsize=None)
def truncation_map(d: int, K_from: int, K_to: int) -> np.ndarray:
    """Positions in the order-``K_from`` layout of the order-``K_to`` terms."""
    pos = index_map(d, K_from)
    return np.array([pos[a] for a in _enumerate(d, K_to)], dtype=int)
