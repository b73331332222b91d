"""Numerical laboratory for flows of time-dependent vector fields."""
