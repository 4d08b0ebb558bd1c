"""Quasi-likelihood analysis for bivariate diffusions observed on
nonsynchronous random time grids."""

from ._backend import BACKEND
from .asymptotics import (
    A_and_derivative,
    AsymptoticsReport,
    SamplingCoefficients,
    estimate_coefficients,
    gamma_example1,
    gamma_general,
    gamma_inv_example1,
    identifiability_gap,
    limit_field,
    nu_measure,
    nu_measures,
    variance_example1,
)
from .config import ConfigError, ExperimentConfig, load_config
from .estimators import (
    EstimateReport,
    bayes,
    hayashi_yoshida,
    nelder_mead_box,
    plugin_crosscov,
    qmle,
)
from .grids import (
    GridError,
    IntervalGrid,
    OverlapMatrix,
    SamplingScheme,
    generate_grid,
    grid_mesh,
    overlap_matrix,
    read_grids,
    write_grids,
)
from .likelihood import (
    NearSingularCorrelationError,
    NonPositiveDefiniteError,
    QuasiLikelihoodWorkspace,
)
from .simulate import (
    DiffusionModel,
    FinePath,
    ModelError,
    ObservationSet,
    example1_model,
    observe,
    read_observations,
    simulate_observations_exact,
    simulate_path,
    write_observations,
)

__version__ = "0.1.0"

__all__ = [
    "A_and_derivative",
    "AsymptoticsReport",
    "BACKEND",
    "ConfigError",
    "DiffusionModel",
    "EstimateReport",
    "ExperimentConfig",
    "FinePath",
    "GridError",
    "IntervalGrid",
    "ModelError",
    "NearSingularCorrelationError",
    "NonPositiveDefiniteError",
    "ObservationSet",
    "OverlapMatrix",
    "QuasiLikelihoodWorkspace",
    "SamplingCoefficients",
    "SamplingScheme",
    "bayes",
    "estimate_coefficients",
    "example1_model",
    "gamma_example1",
    "gamma_general",
    "gamma_inv_example1",
    "generate_grid",
    "grid_mesh",
    "hayashi_yoshida",
    "identifiability_gap",
    "limit_field",
    "load_config",
    "nelder_mead_box",
    "nu_measure",
    "nu_measures",
    "observe",
    "overlap_matrix",
    "plugin_crosscov",
    "qmle",
    "read_grids",
    "read_observations",
    "simulate_observations_exact",
    "simulate_path",
    "variance_example1",
    "write_grids",
    "write_observations",
]
