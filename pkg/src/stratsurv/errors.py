"""Exception types shared across the package."""


class InvalidParameterError(ValueError):
    """An argument violates a documented precondition (wrong range, sign, shape)."""


class InvalidModelError(ValueError):
    """The requested model cannot be fit to the data (no events, no contrast)."""


class DegenerateTestError(RuntimeError):
    """A test statistic has zero variance; carries the observed-minus-expected sum."""

    def __init__(self, message: str, observed_minus_expected: float = 0.0):
        super().__init__(message)
        self.observed_minus_expected = observed_minus_expected


class DataFormatError(ValueError):
    """An external dataset file is malformed; carries the offending row number."""

    def __init__(self, message: str, row: int | None = None):
        super().__init__(message if row is None else f"row {row}: {message}")
        self.row = row


class ConfigError(ValueError):
    """A study configuration file failed validation; carries file and line."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        loc = ""
        if path is not None:
            loc = f"{path}:" if line is None else f"{path}:{line}:"
        super().__init__(f"{loc} {message}" if loc else message)
        self.path = path
        self.line = line
