"""Exception and warning types raised across the toolkit."""


class PanoDragError(Exception):
    """Base class for all toolkit errors."""


class InvalidArgumentError(PanoDragError, ValueError):
    pass


class DegenerateInputError(PanoDragError, ValueError):
    """Geometric input has no well-defined answer (zero vector, antipodes, ...)."""


class DegenerateBasisError(DegenerateInputError):
    """Tangent basis requested at (or numerically at) a pole."""


class DegenerateGreatCircleError(DegenerateInputError):
    """Handle and target are coincident or antipodal on the sphere."""


class DegenerateProjectionError(DegenerateInputError):
    """Current point is parallel to the great-circle normal."""


class DimensionMismatchError(PanoDragError, ValueError):
    pass


class InvalidMetricError(PanoDragError, ValueError):
    """A distance function left its declared [0, 1] range."""


class InsufficientSamplesError(PanoDragError, ValueError):
    pass


class NotPSDError(PanoDragError, ValueError):
    pass


class CaseFormatError(PanoDragError):
    """Base for on-disk case problems; subclasses give the distinct diagnostics."""


class MissingFileError(CaseFormatError, FileNotFoundError):
    pass


class SchemaError(CaseFormatError, ValueError):
    pass


class DragAbortedError(PanoDragError, RuntimeError):
    pass


class PoleAmbiguityWarning(UserWarning):
    """A point landed on a pole, where longitude is undefined (fixed to 0)."""


class ClampWarning(UserWarning):
    """A sample position fell outside the vertical range and was clamped."""
