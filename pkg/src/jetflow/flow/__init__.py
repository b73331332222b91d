"""Flows of time-dependent vector fields: catalog fields, Picard solver, gluing."""

from .fields import (
    ConcatField,
    ReversedField,
    ScaledField,
    SeparableField,
    SumField,
    TimeDependentField,
    concat_fields,
    field_from_config,
    reverse_field,
    zero_field,
)
from .solver import (
    AdmissibilityError,
    FlowError,
    FlowTrajectory,
    PicardWindow,
    WindowSolution,
    det_jacobian_min,
    field_seminorm,
    flow_jet_transport,
    flow_residual,
    glue_flow,
    pick_delta,
    pick_delta_auto,
    picard_solve_window,
    plan_windows,
    solve_flow,
    time_continuity_report,
    time_integral,
)

__all__ = [
    "AdmissibilityError",
    "ConcatField",
    "FlowError",
    "FlowTrajectory",
    "PicardWindow",
    "ReversedField",
    "ScaledField",
    "SeparableField",
    "SumField",
    "TimeDependentField",
    "WindowSolution",
    "concat_fields",
    "det_jacobian_min",
    "field_from_config",
    "field_seminorm",
    "flow_jet_transport",
    "flow_residual",
    "glue_flow",
    "pick_delta",
    "pick_delta_auto",
    "picard_solve_window",
    "plan_windows",
    "reverse_field",
    "solve_flow",
    "time_continuity_report",
    "time_integral",
    "zero_field",
]
