"""Simulation and central-limit diagnostics for self-similar Gaussian processes.

The package is organized around the pipeline

    models -> covgrid -> sampler -> montecarlo
                 \\-> analysis          |
    hermite -> limitvar  <-------------/

models holds the covariance catalog in shape-function form, covgrid builds
exact increment covariance matrices, sampler draws exact Gaussian batches
with replica-indexed counter-based streams, hermite/limitvar provide chaos
expansions and the limiting variance series, montecarlo runs replicated
experiments against exact finite-n oracles, and analysis audits the
structural hypotheses, quantitative envelopes and contraction norms.
"""

from ._version import __version__
from .covgrid import IncrementCovariance, increment_cov
from .errors import DomainError, GateError, GridError, NumericalError, SingularityError
from .hermite import HermiteFunction, builtin_family, expand, hermite_eval
from .limitvar import LimitVariance, second_difference, sigma_q_sq, sigma_sq
from .models import Model, kernel_eval, list_models, make_model, phi_eval, psi_eval
from .montecarlo import (
    ExperimentResult,
    exact_variance,
    functional,
    run_experiment,
)
from .sampler import SampleBatch, cholesky, draw, normal_icdf, sample_batch

__all__ = [
    "__version__",
    "DomainError", "GateError", "GridError", "NumericalError", "SingularityError",
    "Model", "make_model", "list_models", "phi_eval", "psi_eval", "kernel_eval",
    "IncrementCovariance", "increment_cov",
    "HermiteFunction", "hermite_eval", "expand", "builtin_family",
    "LimitVariance", "second_difference", "sigma_q_sq", "sigma_sq",
    "SampleBatch", "cholesky", "draw", "sample_batch", "normal_icdf",
    "ExperimentResult", "functional", "exact_variance", "run_experiment",
]
