"""Exception types shared across the package."""


class AkdError(Exception):
    """Base class for every error raised by this package."""


class ShapeError(AkdError):
    """Operands have incompatible shapes."""


class ParameterError(AkdError):
    """A numeric parameter is outside its allowed range."""


class ContractError(AkdError):
    """An API contract was violated by the caller."""


class DataError(AkdError):
    """Input data violates a documented precondition."""


class NumericError(AkdError):
    """A computation left the numerically safe regime."""


class ConfigError(AkdError):
    """Experiment configuration is missing, malformed, or inconsistent."""


class ParseError(AkdError):
    """A delimited-text or metrics file could not be parsed."""


class CheckpointError(AkdError):
    """A model checkpoint file is malformed."""
