"""Maximum-likelihood factor analysis, ``Sigma = L L^T + Psi``, fitted by EM.

Means are profiled out: every fit works from the sample covariance with
denominator ``n``, and the log-likelihood is

    -(n/2) [k log(2 pi) + log det Sigma + tr(Sigma^-1 S)].
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import linalg

from singular_bic.coefficients import (
    FA_TABLE_MAX_FACTORS,
    FA_TABLE_VARIABLES,
    fa_learning_coefficient,
    fa_model_dimension,
)
from singular_bic.errors import (
    DegenerateError,
    DimensionError,
    NotPositiveDefiniteError,
    RangeError,
    ValidationError,
)
from singular_bic.solver import SbicInput, build_chain_input

logger = logging.getLogger(__name__)

DEFAULT_FLOOR_SCALE = 1e-4


@dataclass(frozen=True, eq=False)
class FactorFit:
    loadings: np.ndarray
    uniquenesses: np.ndarray
    loglik: float
    iterations: int = 0
    trace: tuple[float, ...] = field(default=(), repr=False)

    @property
    def n_factors(self) -> int:
        return int(self.loadings.shape[1])

    @property
    def covariance(self) -> np.ndarray:
        return self.loadings @ self.loadings.T + np.diag(self.uniquenesses)


@dataclass(frozen=True, eq=False)
class FactorProfile:
    """Best fit for ``0..max_factors`` factors."""

    fits: tuple[FactorFit, ...]
    n: int
    n_variables: int

    @property
    def logliks(self) -> tuple[float, ...]:
        return tuple(fit.loglik for fit in self.fits)

    @property
    def max_factors(self) -> int:
        return len(self.fits) - 1


def sample_covariance(observations: np.ndarray) -> np.ndarray:
    """Covariance of the rows of ``observations`` with denominator ``n``."""
    x = np.asarray(observations, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise DimensionError(f"Need an (n, k) array with n >= 2, got shape {x.shape}")
    centered = x - x.mean(axis=0)
    return centered.T @ centered / x.shape[0]


def _check_covariance(s: np.ndarray) -> None:
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise DimensionError(f"Covariance must be square, got shape {s.shape}")
    if not np.allclose(s, s.T, rtol=1e-10, atol=1e-12):
        raise NotPositiveDefiniteError("Sample covariance is not symmetric")
    try:
        linalg.cholesky(s, lower=True)
    except linalg.LinAlgError as e:
        raise NotPositiveDefiniteError("Sample covariance is not positive definite") from e


def gaussian_loglik(sigma: np.ndarray, s: np.ndarray, n: int) -> float:
    """Profile log-likelihood of covariance ``sigma`` given sample covariance ``s``.

    Raises:
        DegenerateError: If ``sigma`` is not numerically positive definite.
    """
    k = s.shape[0]
    try:
        factor = linalg.cho_factor(sigma, lower=True)
    except linalg.LinAlgError as e:
        raise DegenerateError("Implied covariance became singular") from e
    log_det = 2.0 * float(np.sum(np.log(np.diag(factor[0]))))
    trace = float(np.trace(linalg.cho_solve(factor, s)))
    return -0.5 * n * (k * math.log(2 * math.pi) + log_det + trace)


def default_uniqueness_floor(s: np.ndarray, scale: float = DEFAULT_FLOOR_SCALE) -> np.ndarray:
    return scale * np.diag(s).copy()


def _em(
    s: np.ndarray,
    n: int,
    loadings: np.ndarray,
    psi: np.ndarray,
    floor: np.ndarray,
    tol: float,
    max_iter: int,
) -> FactorFit:
    n_factors = loadings.shape[1]
    eye = np.eye(n_factors)
    loglik = gaussian_loglik(loadings @ loadings.T + np.diag(psi), s, n)
    trace = [loglik]
    iterations = 0
    while iterations < max_iter:
        iterations += 1
        sigma = loadings @ loadings.T + np.diag(psi)
        try:
            beta = linalg.solve(sigma, loadings, assume_a="pos").T
        except linalg.LinAlgError as e:
            raise DegenerateError("Implied covariance became singular") from e
        s_beta = s @ beta.T
        second_moment = eye - beta @ loadings + beta @ s_beta
        loadings = linalg.solve(second_moment, s_beta.T, assume_a="pos").T
        psi = np.maximum(np.diag(s) - np.einsum("ij,ij->i", loadings, s_beta), floor)
        new_loglik = gaussian_loglik(loadings @ loadings.T + np.diag(psi), s, n)
        trace.append(new_loglik)
        gain = new_loglik - loglik
        if gain < -1e-8:
            logger.warning("Factor EM log-likelihood decreased by %.3g at iteration %d", -gain, iterations)
        loglik = new_loglik
        if gain < tol:
            break
    return FactorFit(
        loadings=loadings, uniquenesses=psi, loglik=loglik, iterations=iterations, trace=tuple(trace)
    )


def _initial_loadings(s: np.ndarray, n_factors: int, rng: np.random.Generator) -> np.ndarray:
    k = s.shape[0]
    q, r = np.linalg.qr(rng.standard_normal((k, n_factors)))
    q = q * np.sign(np.diag(r))
    return np.sqrt(np.diag(s))[:, None] * q


def _restart(
    s: np.ndarray,
    n: int,
    n_factors: int,
    restart: int,
    seed: int,
    floor: np.ndarray,
    tol: float,
    max_iter: int,
) -> Optional[FactorFit]:
    rng = np.random.default_rng([seed, n_factors, restart])
    loadings = _initial_loadings(s, n_factors, rng)
    psi = np.maximum(np.diag(s) - np.sum(loadings**2, axis=1), floor)
    try:
        return _em(s, n, loadings, psi, floor, tol, max_iter)
    except DegenerateError as e:
        logger.debug("Restart %d with %d factors skipped: %s", restart, n_factors, e.message)
        return None


def fa_fit(
    s: np.ndarray,
    n: int,
    n_factors: int,
    floor: Optional[np.ndarray] = None,
    seed: int = 0,
    restarts: int = 50,
    tol: float = 1e-8,
    max_iter: int = 5000,
) -> FactorFit:
    """Best EM fit of the ``n_factors`` model over random restarts.

    Zero factors has the closed form ``Psi = diag(S)``. Otherwise each
    restart starts from orthonormal random loadings scaled by the sample
    standard deviations and draws from the stream ``(seed, n_factors, r)``.

    Raises:
        NotPositiveDefiniteError: If ``s`` is not symmetric positive definite.
        RangeError: If the model has more parameters than the saturated one plus
            the ``k`` uniquenesses, or more factors than variables.
        DegenerateError: If every restart ran into a singular covariance.
    """
    s = np.asarray(s, dtype=float)
    _check_covariance(s)
    k = s.shape[0]
    if n_factors < 0 or n_factors > k or fa_model_dimension(k, n_factors) > k * (k + 1) // 2 + k:
        raise RangeError(f"{n_factors} factors overparametrize a {k}x{k} covariance")
    if restarts < 1:
        raise ValidationError(f"restarts must be at least 1, got {restarts}")
    floor = default_uniqueness_floor(s) if floor is None else np.broadcast_to(floor, (k,)).astype(float)

    if n_factors == 0:
        psi = np.diag(s).copy()
        return FactorFit(
            loadings=np.zeros((k, 0)), uniquenesses=psi, loglik=gaussian_loglik(np.diag(psi), s, n)
        )

    best: Optional[FactorFit] = None
    for restart in range(restarts):
        fit = _restart(s, n, n_factors, restart, seed, floor, tol, max_iter)
        if fit is not None and (best is None or fit.loglik > best.loglik):
            best = fit
    if best is None:
        raise DegenerateError(f"All {restarts} restarts with {n_factors} factors degenerated")
    return best


def fa_fit_profile(
    s: np.ndarray,
    n: int,
    max_factors: int = FA_TABLE_MAX_FACTORS,
    seed: int = 0,
    restarts: int = 50,
    floor: Optional[np.ndarray] = None,
    threads: int = 1,
    tol: float = 1e-8,
    max_iter: int = 5000,
) -> FactorProfile:
    """Fits for ``0..max_factors`` factors; factor counts run in parallel when ``threads > 1``."""
    s = np.asarray(s, dtype=float)
    counts = range(max_factors + 1)
    args = [(s, n, i, floor, seed, restarts, tol, max_iter) for i in counts]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            fits = list(pool.map(fa_fit, *zip(*args)))
    else:
        fits = [fa_fit(*a) for a in args]

    for i in range(1, len(fits)):
        if fits[i].loglik < fits[i - 1].loglik - 1e-8:
            logger.warning(
                "Factor profile not monotone: %d factors %.6g < %d factors %.6g",
                i,
                fits[i].loglik,
                i - 1,
                fits[i - 1].loglik,
            )
    return FactorProfile(fits=tuple(fits), n=n, n_variables=s.shape[0])


def fa_sbic_input(
    profile: FactorProfile,
    n: Optional[int] = None,
    prior: Optional[Sequence[float]] = None,
) -> SbicInput:
    """Chain ``0 <= 1 <= ... <= max_factors`` with the tabulated coefficients.

    Raises:
        RangeError: Unless there are six variables and at most three factors.
    """
    if profile.n_variables != FA_TABLE_VARIABLES:
        raise RangeError(
            f"Learning coefficients are tabulated for {FA_TABLE_VARIABLES} variables only, got {profile.n_variables}"
        )
    if profile.max_factors > FA_TABLE_MAX_FACTORS:
        raise RangeError(
            f"Learning coefficients are tabulated up to {FA_TABLE_MAX_FACTORS} factors, got {profile.max_factors}"
        )
    counts = range(profile.max_factors + 1)
    return build_chain_input(
        logliks=profile.logliks,
        n=profile.n if n is None else n,
        coefficient=fa_learning_coefficient,
        dims=[fa_model_dimension(profile.n_variables, i) for i in counts],
        labels=[str(i) for i in counts],
        prior=prior,
    )
