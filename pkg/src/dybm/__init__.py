"""Dynamic Boltzmann machines for online time-series learning.

Binary DyBMs (spiking neurons learned as a streaming logit model) and Gaussian
DyBMs (VAR models extended with eligibility traces), trained online by
stochastic, natural-gradient or AdaGrad-scaled updates.
"""

from .binary import BinaryDyBM, OriginalBinaryDyBM, firing_probability, log_probability, sigmoid
from .errors import (
    BoundaryError, ConfigError, DimensionError, DivergenceError, DomainError, InvalidParameterError,
    NumericalError, SnapshotError,
)
from .experiment import ExperimentConfig, NoisySine, RunRecord, run_online
from .gaussian import GaussianDyBM, scalar_model, var_baseline
from .optim import AdaGrad
from .traces import DelayLine, TraceVector, compute_beta

__version__ = "0.1.0"

__all__ = [
    "AdaGrad", "BinaryDyBM", "BoundaryError", "ConfigError", "DelayLine", "DimensionError",
    "DivergenceError", "DomainError", "ExperimentConfig", "GaussianDyBM", "InvalidParameterError",
    "NoisySine", "NumericalError", "OriginalBinaryDyBM", "RunRecord", "SnapshotError", "TraceVector",
    "compute_beta", "firing_probability", "log_probability", "run_online", "scalar_model", "sigmoid",
    "var_baseline",
]
