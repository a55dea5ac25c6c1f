"""Exception types shared across the toolkit."""


class VsgError(Exception):
    """Base class for all toolkit errors."""


class InvalidDimensions(VsgError):
    """Mask or grid dimensions are inconsistent with the data."""


class CorruptMask(VsgError):
    """RLE runs do not describe a canonical mask of the stated size."""


class EmptyMask(VsgError):
    """An operation requiring a nonempty mask received an empty one."""


class InvalidParam(VsgError):
    """A numeric parameter is outside its valid range."""


class InvalidSpec(VsgError):
    """A scene specification cannot be realized."""


class PropagationError(VsgError):
    """The mask propagator failed at a specific frame."""

    def __init__(self, frame: int, message: str = ""):
        self.frame = frame
        super().__init__(message or f"propagation failed at frame {frame}")


class EmptyInput(VsgError):
    """The resampler received an empty token set."""


class InvalidInput(VsgError):
    """Paired inputs disagree in length or are empty."""


class JudgeUnavailable(VsgError):
    """The semantic judge could not produce a verdict; the metric run aborts."""


class ParseError(VsgError):
    """An input file is malformed."""

    def __init__(self, message: str, line: int | None = None, offset: int | None = None):
        self.line = line
        self.offset = offset
        where = ""
        if line is not None:
            where += f" line {line}"
        if offset is not None:
            where += f" offset {offset}"
        super().__init__(message + where)


class ConfigError(VsgError):
    """A run configuration violates an invariant."""
