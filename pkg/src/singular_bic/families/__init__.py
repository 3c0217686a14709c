"""Built-in model families: each fits a likelihood profile and assembles a chain ``SbicInput``."""

from singular_bic.families.factor import (
    FactorFit,
    FactorProfile,
    fa_fit,
    fa_fit_profile,
    fa_sbic_input,
    gaussian_loglik,
    sample_covariance,
)
from singular_bic.families.mixture import (
    MixtureFit,
    MixtureProfile,
    em_fit,
    fit_mixture_profile,
    mixture_loglik,
    mixture_sbic_input,
    random_membership_init,
)
from singular_bic.families.rrr import (
    RrrData,
    RrrProfile,
    fit_profile,
    rrr_sbic_input,
    simulate_coefficient_matrix,
    simulate_data,
)

__all__ = [
    # Reduced-rank regression
    "RrrData",
    "RrrProfile",
    "simulate_coefficient_matrix",
    "simulate_data",
    "fit_profile",
    "rrr_sbic_input",
    # Gaussian mixtures
    "MixtureFit",
    "MixtureProfile",
    "random_membership_init",
    "em_fit",
    "fit_mixture_profile",
    "mixture_loglik",
    "mixture_sbic_input",
    # Factor analysis
    "FactorFit",
    "FactorProfile",
    "sample_covariance",
    "gaussian_loglik",
    "fa_fit",
    "fa_fit_profile",
    "fa_sbic_input",
]
