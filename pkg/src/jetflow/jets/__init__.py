"""Truncated jets, Faà di Bruno composition and combinatorial majorants."""

from .fdb import FdBPartition, compose_plan, enumerate_fdb_partitions, jet_compose, jet_inverse
from .jet import JetMismatchError, JetPoly, jet_arith, jet_mul
from .multiindex import MultiIndex, enumerate_multiindices

__all__ = [
    "FdBPartition",
    "JetMismatchError",
    "JetPoly",
    "MultiIndex",
    "compose_plan",
    "enumerate_fdb_partitions",
    "enumerate_multiindices",
    "jet_arith",
    "jet_compose",
    "jet_inverse",
    "jet_mul",
]

from .majorant import (  # noqa: E402
    ChildressResult,
    MajorantOverflowError,
    childress_check,
    fdb_majorant_sum,
    fit_majorant_constants,
)

__all__ += [
    "ChildressResult",
    "MajorantOverflowError",
    "childress_check",
    "fdb_majorant_sum",
    "fit_majorant_constants",
]
