"""Exception types shared across the package.

Every guard failure is loud and typed; callers that want budget-style
soft termination catch the specific class.
"""
from __future__ import annotations


class PuzzlenestError(Exception):
    """Base class for all package errors."""


class PreconditionError(PuzzlenestError):
    """An operation was called outside its contract."""


class RayTraceError(PuzzlenestError):
    """Ray or equipotential continuation failed (Newton divergence,
    step underflow)."""


class LocateError(PuzzlenestError):
    """A point could not be assigned to a puzzle piece."""


class BoundaryProximityError(LocateError):
    """Point within the geometric guard distance of the skeleton;
    the combinatorial answer would not be trustworthy."""


class GeometryError(PuzzlenestError):
    """Polygon realization failed (non-simple boundary, pullback did not
    close up, degenerate annulus)."""


class CombinatoricsError(PuzzlenestError):
    """Symbolic bookkeeping detected an inconsistency (address collision,
    shift mismatch)."""


class BudgetExceededError(PuzzlenestError):
    """An iteration or depth budget ran out before the quantity was decided."""


class ModulusError(PuzzlenestError):
    """The conformal modulus estimator could not certify a value."""
