"""Singular Bayesian information criterion (sBIC) for posets of nested models.

This package computes BIC and sBIC scores with exact learning coefficients,
and ships reduced-rank regression, Gaussian mixture and factor analysis
pipelines plus a Monte Carlo harness for rank selection.
"""

from singular_bic.coefficients import (
    CoefficientMatrix,
    LearningCoefficient,
    ValidationReport,
    bayes_complexity,
    compare_bayes_complexity,
    fa_learning_coefficient,
    fa_model_dimension,
    mixture_lambda_bound,
    mixture_model_dimension,
    rrr_learning_coefficient,
    rrr_model_dimension,
    validate_matrix,
)
from singular_bic.config import SbicConfig
from singular_bic.errors import (
    NumericalError,
    OutputError,
    SbicError,
    SchemaError,
    ValidationError,
)
from singular_bic.experiments import (
    SelectionFrequencies,
    emit_results,
    entropy,
    read_frequencies,
    run_factor_subsample_study,
    run_rrr_experiment,
)
from singular_bic.poset import ModelPoset, build_poset, chain_poset, down_set, linear_extension
from singular_bic.solver import (
    SbicInput,
    SbicResult,
    bic,
    build_chain_input,
    fixed_point_oracle,
    log_lprime_ij,
    posterior_probabilities,
    residual,
    solve,
)
from singular_bic.types import ExperimentConfig, ModelCollectionFile

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # Poset
    "ModelPoset",
    "build_poset",
    "chain_poset",
    "down_set",
    "linear_extension",
    # Coefficients
    "LearningCoefficient",
    "CoefficientMatrix",
    "ValidationReport",
    "validate_matrix",
    "bayes_complexity",
    "compare_bayes_complexity",
    "rrr_learning_coefficient",
    "rrr_model_dimension",
    "fa_learning_coefficient",
    "fa_model_dimension",
    "mixture_lambda_bound",
    "mixture_model_dimension",
    # Solver
    "SbicInput",
    "SbicResult",
    "log_lprime_ij",
    "bic",
    "build_chain_input",
    "solve",
    "residual",
    "fixed_point_oracle",
    "posterior_probabilities",
    # Experiments
    "ExperimentConfig",
    "SelectionFrequencies",
    "run_rrr_experiment",
    "entropy",
    "emit_results",
    "read_frequencies",
    "run_factor_subsample_study",
    # Files and config
    "ModelCollectionFile",
    "SbicConfig",
    # Errors
    "SbicError",
    "SchemaError",
    "ValidationError",
    "NumericalError",
    "OutputError",
]
