"""Combinatorial majorants behind the composition estimates."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..sequences import WeightSequence
from . import multiindex as mi
from .fdb import enumerate_fdb_partitions


def integer_partitions(n: int):
    """Partitions of ``n`` as multiplicity vectors ``(k_1, ..., k_n)``, ``sum i k_i = n``."""

    def rec(remaining, largest):
        if remaining == 0:
            yield {}
            return
        for part in range(min(remaining, largest), 0, -1):
            for rest in rec(remaining - part, part):
                counts = dict(rest)
                counts[part] = counts.get(part, 0) + 1
                yield counts

    for counts in rec(n, n):
        yield tuple(counts.get(i, 0) for i in range(1, n + 1))


@dataclass(frozen=True)
class ChildressResult:
    holds: bool
    n: int
    violation: tuple[int, ...] | None = None
    lhs: float | None = None
    rhs: float | None = None

    def __bool__(self):
        return self.holds


def childress_check(M: WeightSequence, n: int) -> ChildressResult:
    """Exhaustively test ``M_1^k M_n >= M_k prod M_i^{k_i}`` over partitions of ``n``.

    Returns the first violating multiplicity vector, if any.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > M.N:
        raise ValueError(f"n={n} exceeds stored length {M.N}")
    for ks in integer_partitions(n):
        k = sum(ks)
        lhs = M[1] ** k * M[n]
        rhs = M[k] * math.prod(M[i + 1] ** ki for i, ki in enumerate(ks))
        if lhs < rhs * (1 - 1e-12):
            return ChildressResult(False, n, ks, lhs, rhs)
    return ChildressResult(True, n)


class MajorantOverflowError(OverflowError):
    def __init__(self, order: int):
        super().__init__(f"majorant sum overflows at |gamma| = {order}")
        self.order = order


def fdb_majorant_sum(M: WeightSequence, A: float, gamma, m: int, n: int) -> float:
    """``sum alpha!/(k_1!...k_l!) A^|alpha| M_|alpha| prod M_|delta_i|^|k_i|``.

    The sum runs over the Faà di Bruno index set of ``gamma`` (length ``n``)
    with ``k_i`` in ``N^m``.
    """
    gamma = tuple(gamma)
    if len(gamma) != n:
        raise ValueError(f"gamma has {len(gamma)} entries, expected n={n}")
    if not A > 0:
        raise ValueError("A must be positive")
    order = mi.order(gamma)
    if order > M.N:
        raise ValueError(f"|gamma|={order} exceeds stored length {M.N}")
    total = 0.0
    for part in enumerate_fdb_partitions(gamma, m):
        a = mi.order(part.alpha)
        term = part.coefficient * A**a * M[a]
        for delta, k in part.blocks:
            term *= M[mi.order(delta)] ** mi.order(k)
        total += term
    if not math.isfinite(total):
        raise MajorantOverflowError(order)
    return total


@dataclass(frozen=True)
class MajorantFit:
    B: float
    C: float
    max_order: int
    normalized_sums: tuple[float, ...]


def fit_majorant_constants(M: WeightSequence, A: float, m: int, n: int, max_order: int) -> MajorantFit:
    """Fit ``(B, C)`` with ``sum <= B C^|gamma| M_|gamma|`` for ``1 <= |gamma| <= max_order``.

    ``s_j`` is the largest normalized sum over ``|gamma| = j``. The fit takes
    ``C = max_j (s_j/s_1)^{1/(j-1)}`` and the smallest ``B`` that then works,
    so the bound is tight at ``|gamma| = 1``.
    """
    s = []
    for j in range(1, max_order + 1):
        best = max(fdb_majorant_sum(M, A, g, m, n) for g in mi.compositions(j, n))
        s.append(best / M[j])
    C = max([1e-300] + [(s[j - 1] / s[0]) ** (1.0 / (j - 1)) for j in range(2, max_order + 1)])
    B = max(s[j - 1] / C**j for j in range(1, max_order + 1))
    return MajorantFit(B, C, max_order, tuple(s))
