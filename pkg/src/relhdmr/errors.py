"""Exception types shared across the package."""


class RelhdmrError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(RelhdmrError):
    """Invalid configuration or inconsistent inputs.

    Carries an optional ``key`` locating the offending config entry
    (dotted path, e.g. ``"al.r_s"``).
    """

    def __init__(self, message, key=None):
        self.key = key
        if key is not None:
            message = f"{key}: {message}"
        super().__init__(message)


class ModelFitError(RelhdmrError):
    """Kriging hyperparameter fit or factorization failed."""


class EvaluationError(RelhdmrError):
    """A limit state or predictor evaluation produced an unusable value."""


class DegenerateProbeError(RelhdmrError):
    """Coupling probe landed on (or too close to) the limit state surface."""


class StructureError(RelhdmrError):
    """The structural model is unstable (singular reduced stiffness)."""
