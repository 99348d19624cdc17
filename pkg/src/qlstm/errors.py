"""Exception hierarchy shared across the package.

The CLI maps these onto stable exit codes: config/data problems -> 2,
numeric failures during training -> 3, model file problems -> 4.
"""


class QlstmError(Exception):
    """Base class for all package errors."""


class ConfigError(QlstmError):
    """Invalid parameter or configuration value."""


class DataError(QlstmError):
    """Input data violates a precondition (bad CSV, constant series, ...)."""


class TrainingDivergenceError(QlstmError):
    """Training loss became non-finite."""


class ModelFormatError(QlstmError):
    """Model file is corrupt, truncated, or has an unsupported version."""
