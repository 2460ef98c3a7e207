"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class ArtScoreError(Exception):
    exit_code = 3


class ConfigError(ArtScoreError, ValueError):
    """Invalid configuration, arguments or domain values."""

    exit_code = 2


class ShapeError(ArtScoreError, ValueError):
    exit_code = 2


class IncompatibleError(ConfigError):
    """Two parameter sets that must share an architecture do not."""


class DivergenceError(ArtScoreError, ArithmeticError):
    """An optimisation produced a non-finite loss."""

    exit_code = 3

    def __init__(self, message, step=None, epoch=None):
        super().__init__(message)
        self.step = step
        self.epoch = epoch


class FormatError(ArtScoreError):
    """A file on disk is not in the expected format or is corrupt."""

    exit_code = 4
