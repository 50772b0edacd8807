#!/usr/bin/env python3
"""
Exception hierarchy for the geometry engine
"""


class GeometryError(Exception):
    """Base class for every error raised by the engine"""


class DomainError(GeometryError):
    """A coordinate point lies outside the chart domain"""


class EvaluationError(GeometryError):
    """An evaluator produced a non-finite or malformed value"""


class ConditioningError(GeometryError):
    """The metric is singular or too badly conditioned to invert"""


class DegenerateFrameError(GeometryError):
    """Seed vectors for a frame are linearly dependent"""


class DegeneratePlaneError(GeometryError):
    """Two tangent vectors do not span a plane"""


class PreconditionViolation(GeometryError):
    """An operation was called on input that violates its premise"""


class VanishingFieldError(GeometryError):
    """A vector field vanishes (numerically) somewhere on the domain"""


class ConstructionError(GeometryError):
    """A built-in geometry failed its own invariants"""


class StiffnessError(GeometryError):
    """The adaptive integrator step size underflowed"""


class DegenerateTrajectoryError(GeometryError):
    """A geodesic left the domain before a single step was accepted"""


class UsageError(Exception):
    """Invalid configuration or command-line usage"""
