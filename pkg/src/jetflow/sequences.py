"""Weight sequences ``M = (M_k)`` and range-checked regularity diagnostics.

Every property here is asymptotic in nature; the functions only inspect the
stored terms and say so in what they return.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

DEFAULT_JET_ORDER = 8


def default_length(K: int = DEFAULT_JET_ORDER) -> int:
    """Number of stored terms ``N = 2K + 4`` used when none is given."""
    return 2 * K + 4


@dataclass(frozen=True)
class WeightSequence:
    """Positive sequence ``M_0, ..., M_N``.

    ``generator`` records where the values came from (``"constant"``,
    ``"gevrey"`` or ``"custom"``) and ``params`` its parameters.
    """

    values: tuple[float, ...]
    generator: str = "custom"
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise ValueError("weight sequence needs at least one term")
        if any(not (v > 0) or not math.isfinite(v) for v in vals):
            raise ValueError("weight sequence entries must be positive and finite")
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, N: int | None = None) -> "WeightSequence":
        N = default_length() if N is None else N
        return cls((1.0,) * (N + 1), "constant", {"N": N})

    @classmethod
    def gevrey(cls, s: float, N: int | None = None) -> "WeightSequence":
        """``M_k = (k!)^s``."""
        N = default_length() if N is None else N
        vals = tuple(math.exp(s * math.lgamma(k + 1)) for k in range(N + 1))
        return cls(vals, "gevrey", {"s": s, "N": N})

    @classmethod
    def from_config(cls, spec) -> "WeightSequence":
        """Build from ``{"generator": "gevrey", "s": 1.0, "N": 24}`` or a list of values."""
        if isinstance(spec, (list, tuple)):
            return cls(tuple(spec))
        gen = spec.get("generator", "custom")
        N = spec.get("N")
        if gen == "constant":
            return cls.constant(N)
        if gen == "gevrey":
            return cls.gevrey(float(spec["s"]), N)
        if gen == "custom":
            return cls(tuple(spec["values"]))
        raise ValueError(f"unknown sequence generator {gen!r}")

    @property
    def N(self) -> int:
        return len(self.values) - 1

    def __len__(self):
        return len(self.values)

    def __getitem__(self, k):
        return self.values[k]

    def as_array(self) -> np.ndarray:
        return np.array(self.values)


def is_log_convex(M: WeightSequence) -> tuple[bool, int | None]:
    """Check ``M_k^2 <= M_{k-1} M_{k+1}``; returns the first violating ``k``."""
    if len(M) < 3:
        raise ValueError("log-convexity needs at least 3 terms")
    v = M.values
    for k in range(1, len(v) - 1):
        if v[k] ** 2 > v[k - 1] * v[k + 1] * (1 + 1e-12):
            return False, k
    return True, None


def moderate_growth_constant(M: WeightSequence) -> float:
    """Smallest ``C`` with ``M_{k+j} <= C^{k+j} M_k M_j`` on the stored range."""
    v = M.values
    C = 0.0
    for n in range(1, len(v)):
        for k in range(n + 1):
            C = max(C, (v[n] / (v[k] * v[n - k])) ** (1.0 / n))
    return C


def is_derivation_closed(M: WeightSequence) -> tuple[bool, float]:
    """Fitted ``C = max_{k>=1} (M_{k+1}/M_k)^{1/k}``.

    The ``k = 0`` instance of ``M_{k+1} <= C^k M_k`` would force ``M_1 <= M_0``
    and is skipped.
    """
    v = M.values
    if len(v) < 3:
        return True, 1.0
    C = max((v[k + 1] / v[k]) ** (1.0 / k) for k in range(1, len(v) - 1))
    return bool(math.isfinite(C)), C


@dataclass(frozen=True)
class QuasianalyticityReport:
    partial_sum: float
    trend: Literal["diverging", "converging", "inconclusive"]
    tail_exponent: float
    N: int


def quasianalyticity_diagnostic(M: WeightSequence, N: int | None = None) -> QuasianalyticityReport:
    """Partial sum of ``1/(k! M_k)^{1/k}`` up to ``N`` and a tail-decay trend.

    The tail exponent ``p`` is the log-log slope of the terms against the
    analytic reference ``(k!)^{1/k}``, so ``M = 1`` gives ``p = 1`` exactly
    and ``M_k = (k!)^s`` gives ``p = 1 + s``. The trend is ``diverging``
    for ``p <= 1.02``, ``converging`` for ``p >= 1.1`` and ``inconclusive``
    in between. Purely numerical.
    """
    N = M.N if N is None else N
    if N > M.N:
        raise ValueError(f"N={N} exceeds stored length {M.N}")
    ks = np.arange(1, N + 1)
    lgk = np.array([math.lgamma(k + 1) for k in ks])
    logM = np.log(M.as_array()[1 : N + 1])
    log_terms = -(lgk + logM) / ks
    partial = float(np.exp(log_terms).sum())
    if N < 4:
        return QuasianalyticityReport(partial, "inconclusive", float("nan"), N)
    tail = slice(N // 2, N)
    ref = lgk[tail] / ks[tail]
    slope = np.polyfit(ref, log_terms[tail], 1)[0]
    p = -float(slope)
    if p <= 1.02:
        trend = "diverging"
    elif p >= 1.1:
        trend = "converging"
    else:
        trend = "inconclusive"
    return QuasianalyticityReport(partial, trend, p, N)


def strict_regularity_check(M: WeightSequence, threshold: int | None = None) -> bool:
    """``M_k^{1/k}`` and ``M_{k+1}/M_k`` strictly increase past a threshold.

    The threshold defaults to ``N // 2``; only the stored range is inspected.
    """
    v = M.as_array()
    N = M.N
    k0 = max(1, N // 2 if threshold is None else threshold)
    if N - k0 < 2:
        return False
    ks = np.arange(k0, N + 1)
    roots = np.exp(np.log(v[k0:]) / ks)
    ratios = v[k0 + 1 :] / v[k0:-1]
    rel = 1e-12
    return bool(np.all(np.diff(roots) > rel * roots[:-1]) and np.all(np.diff(ratios) > rel * ratios[:-1]))


@dataclass(frozen=True)
class RegularityReport:
    normalized: bool
    nondecreasing: bool
    log_convex: bool
    log_convex_violation: int | None
    moderate_growth: float
    derivation_closed: float
    strictly_regular: bool
    quasianalytic_trend: str
    inspected_range: int

    @property
    def regular(self) -> bool:
        return self.normalized and self.nondecreasing and self.log_convex and math.isfinite(
            self.moderate_growth
        )


def regularity_report(M: WeightSequence) -> RegularityReport:
    """All range-checked conditions for regular/strictly regular sequences."""
    v = M.values
    lc, where = is_log_convex(M)
    _, dc = is_derivation_closed(M)
    return RegularityReport(
        normalized=abs(v[0] - 1.0) < 1e-12,
        nondecreasing=all(b >= a for a, b in zip(v, v[1:])),
        log_convex=lc,
        log_convex_violation=where,
        moderate_growth=moderate_growth_constant(M),
        derivation_closed=dc,
        strictly_regular=strict_regularity_check(M),
        quasianalytic_trend=quasianalyticity_diagnostic(M).trend,
        inspected_range=M.N,
    )
