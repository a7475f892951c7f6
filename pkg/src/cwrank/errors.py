"""Exception types shared across the package."""


class CwrankError(Exception):
    """Base class for all cwrank-specific errors."""


class SchemaError(CwrankError):
    """An input file is missing a required column or header."""


class ParseError(CwrankError):
    """A row or line of an input file could not be parsed."""


class EmptyDatasetError(CwrankError):
    """A loader produced zero usable rows."""


class ConfigError(CwrankError):
    """An invalid or incomplete configuration was supplied."""


class DegenerateInputError(CwrankError):
    """Input is structurally valid but too degenerate to operate on."""


class UndefinedMetricError(CwrankError):
    """A ranking metric is undefined for the given judged pool (R = 0)."""


class BatchTooShortError(CwrankError):
    """A padded batch is shorter than a convolution filter width."""


class InternalConsistencyError(CwrankError):
    """Shapes recorded in a forward trace disagree with the backward inputs."""


class TrainingError(CwrankError):
    """Training aborted (non-finite gradients or parameters)."""
