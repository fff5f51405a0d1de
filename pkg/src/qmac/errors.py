"""Exception hierarchy.

The CLI maps these onto exit codes: validation errors exit 2, resource caps
exit 3, internal-consistency failures exit 4.
"""


class QmacError(ValueError):
    """Base class for all library errors."""

    exit_code = 2


class ValidationError(QmacError):
    """Malformed or invariant-violating input (states, channels, files)."""


class InvalidStateError(ValidationError):
    pass


class InvalidChannelError(ValidationError):
    pass


class InvalidInstrumentError(ValidationError):
    pass


class RegisterError(ValidationError):
    pass


class ShapeError(ValidationError):
    """Ensemble does not have the shape a region kind requires."""


class ConfigError(ValidationError):
    pass


class DimensionCapError(QmacError):
    exit_code = 3


class ConsistencyError(QmacError):
    """A quantity that is provably non-negative came out clearly negative."""

    exit_code = 4
