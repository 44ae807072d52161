"""Exception types shared across the package."""


class TiltgaitError(Exception):
    """Base class for all package errors."""


class GaitFormatError(TiltgaitError):
    """Gait file is syntactically malformed.

    Carries the 1-based line number of the offending line when known.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class GaitValidationError(TiltgaitError):
    """Gait data violates a structural invariant (names the invariant)."""


class SingularityError(TiltgaitError):
    """Decoupling matrix is singular or inside the safety margin.

    ``condition`` holds the invertibility-condition value at the offending
    state when available.
    """

    def __init__(self, message, condition=None):
        self.condition = condition
        super().__init__(message)


class BlowUpError(TiltgaitError):
    """Simulation state became non-finite; carries the simulation time."""

    def __init__(self, message, t=None):
        self.t = t
        super().__init__(message)


class ExperimentFailure(TiltgaitError):
    """A closed-loop run could not be completed.

    ``reason`` distinguishes ``"divergence"`` (state blow-up or attitude
    outside the valid Euler range) from ``"singularity"`` (persistently
    violated invertibility margin). ``t`` is the failure time.
    """

    def __init__(self, message, reason, t=None):
        self.reason = reason
        self.t = t
        super().__init__(message)


class ConfigError(TiltgaitError):
    """Invalid configuration file or command-line override."""
