"""Validated numerics for the branch of relative choreographies joining the
Lagrange triangle to the figure eight in the equal-mass three-body problem."""

from .rigor import Ball, Interval
from .series import NormParams

__version__ = "0.1.0"

__all__ = ["Ball", "Interval", "NormParams", "__version__"]
