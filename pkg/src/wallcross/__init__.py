"""Exact and numerical tools for stability data on graded Lie algebras of torus vector fields."""

__version__ = "0.1.0"
