"""Exception hierarchy shared across the package.

Validation problems (bad configs, inconsistent dimensions, degenerate
geometry) derive from :class:`ValidationError`; runtime numerical failures
(e.g. an image left empty by filtering) derive from :class:`NumericalError`.
The CLI maps these onto distinct exit codes.
"""


class ValidationError(ValueError):
    """Input rejected before any computation was attempted."""


class ConfigurationError(ValidationError):
    """A configuration value is missing, unknown, or out of range."""


class StructuralError(ValidationError):
    """Array dimensions or index structures are mutually inconsistent."""


class InsufficientDataError(ValidationError):
    """Too few valid samples to perform the requested operation."""


class DegenerateGeometryError(ValidationError):
    """Geometric input collapses to a lower dimension (e.g. collinear points)."""


class NumericalError(RuntimeError):
    """A computation ran but produced no usable result."""


class EmptyImageError(NumericalError):
    """An image has no valid pixels where at least one is required."""
