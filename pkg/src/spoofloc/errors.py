"""Exception hierarchy shared by every pipeline stage.

The CLI maps ``InputValidationError`` (and its subclasses) and ``CheckpointError``
to exit code 1; everything else is a runtime failure (exit code 2).
"""


class SpoofLocError(Exception):
    """Base class for all spoofloc errors."""


class InputValidationError(SpoofLocError, ValueError):
    """Malformed input: bad annotations, regions, manifests, shapes."""


class PolicyError(InputValidationError):
    """A request that is well-formed but violates an augmentation policy."""


class ConfigError(InputValidationError):
    """Unknown keys, ambiguous keys or badly typed configuration values."""


class CheckpointError(SpoofLocError):
    """Unreadable checkpoint or a checkpoint built for another configuration."""


class TrainingError(SpoofLocError, RuntimeError):
    """Training cannot continue (for example a non-finite loss)."""
