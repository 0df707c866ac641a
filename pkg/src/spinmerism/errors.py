"""Exception hierarchy shared by all modules."""


class SpinmerismError(Exception):
    """Base class for errors raised by this package."""


class ParameterError(SpinmerismError, ValueError):
    """Invalid argument value or inconsistent inputs."""


class ConvergenceError(SpinmerismError):
    """Iterative eigensolver failed within its iteration budget."""

    def __init__(self, message, best_residual=None):
        super().__init__(message)
        self.best_residual = best_residual


class SpinLabelError(SpinmerismError):
    """An eigenvector could not be assigned a definite spin."""


class ProjectorError(SpinmerismError):
    """Local spin operator has an eigenvalue that is not s(s+1)."""


class TrackingError(SpinmerismError):
    """Fewer states than required were found in a solved window."""


class FcidumpError(SpinmerismError, ValueError):
    """Malformed integral file. Carries the offending line number."""

    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno


class IntegrityError(FcidumpError):
    """Two entries of an integral file disagree after symmetrization."""


class ConfigError(SpinmerismError, ValueError):
    """A configuration file that does not match what the command accepts."""
