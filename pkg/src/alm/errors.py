"""Exception types shared across the toolkit.

The CLI maps ConfigError/InputError/CheckpointError to exit code 1
(validation) and everything else to exit code 2 (runtime).
"""


class AlmError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(AlmError):
    """Invalid configuration value or flag combination."""


class InputError(AlmError):
    """Invalid or unusable input data (empty corpus, bad record, bad bytes)."""


class ShapeError(AlmError):
    """Tensor shape mismatch; message names both shapes."""


class NonFiniteError(AlmError):
    """An operation produced inf/nan, or training diverged."""


class CheckpointError(AlmError):
    """Malformed checkpoint file or tokenizer-hash mismatch."""
