"""Exception hierarchy shared across the package."""


class GotchaError(Exception):
    """Base class for all domain errors raised by this package."""


class InputShapeError(GotchaError, ValueError):
    """An array argument has the wrong length, shape, or value domain."""


class ConfigError(GotchaError, ValueError):
    """A configuration value violates a module precondition."""


class FormatError(GotchaError):
    """A file is malformed: bad magic, unsupported version, truncation, or
    an unparseable record."""


class IntegrityError(GotchaError):
    """Data is well-formed but inconsistent: duplicate ids, mismatched
    dimensions across records."""


class NumericError(GotchaError):
    """A non-finite value appeared where the math requires finite input."""


class EmptyScanError(GotchaError):
    """A gallery scan had no eligible records left."""
