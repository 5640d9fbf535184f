"""Exception hierarchy shared by every module."""


class FbsError(ValueError):
    """Base class for all errors raised by eitfbs."""


class ConfigError(FbsError):
    """A configuration key is missing or has an invalid value."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


class TruncationError(FbsError):
    """A time grid is too short for the requested envelope."""


class WraparoundError(FbsError):
    """Envelope is not negligible at the grid edges (spectral wraparound)."""


class SingularSystemError(FbsError):
    """The steady-state coherence system cannot be solved."""


class ConvergenceError(FbsError):
    """A numerical integration or fit did not converge."""


class FitError(FbsError):
    """A least-squares fit failed or the data are degenerate."""


class InconsistentDataError(FbsError):
    """Measured inputs are mutually inconsistent."""
