"""Exception types raised by the dybm package."""


class DimensionError(ValueError):
    """Array shapes do not agree with the model or state dimensions."""


class InvalidParameterError(ValueError):
    """A hyperparameter or parameter value is outside its valid range."""


class DomainError(ValueError):
    """Input data lies outside the domain of the model (e.g. non-binary spikes)."""


class BoundaryError(IndexError):
    """A windowed statistic was requested too close to the edge of a stream."""


class NumericalError(FloatingPointError):
    """A non-finite value appeared in an update or prediction."""


class DivergenceError(NumericalError):
    """An online run produced a non-finite prediction."""

    def __init__(self, run, step, message=None):
        self.run = run
        self.step = step
        super().__init__(message or f"run {run} diverged at step {step}: non-finite prediction")


class ConfigError(ValueError):
    """Experiment configuration is invalid."""


class SnapshotError(ValueError):
    """A snapshot file is missing, corrupt, or has an unsupported version."""
