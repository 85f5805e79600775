"""Exception and warning types shared across the package."""

from __future__ import annotations


class DimensionError(ValueError):
    """Operands have incompatible shapes or subsystem layouts."""


class NonFiniteError(ValueError):
    """An input contains NaN or infinite entries."""


class ValidationError(ValueError):
    """A tagged invariant (Hermiticity, positivity, trace) does not hold."""


class ConfigError(ValueError):
    """A sweep or comparison configuration is malformed."""


class QuadratureWarning(RuntimeWarning):
    """Quadrature did not reach its tolerance target; the estimate is still returned."""


class PhysicsWarning(RuntimeWarning):
    """A model is used outside the regime where its approximations hold."""
