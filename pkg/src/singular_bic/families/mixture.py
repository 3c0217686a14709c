"""Univariate Gaussian mixtures with unequal variances, fitted by restarted EM."""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from singular_bic.coefficients import mixture_lambda_bound, mixture_model_dimension
from singular_bic.errors import DegenerateComponentError, DimensionError, ValidationError
from singular_bic.solver import SbicInput, build_chain_input

logger = logging.getLogger(__name__)

MIN_RESPONSIBILITY = 1e-10
DEFAULT_FLOOR_SCALE = 1e-4
# Responsibility mass below which a component pinned at the floor covers one observation.
MIN_SUPPORT = 1.5
# Restarts run as one block up to this many responsibilities.
BATCH_ELEMENTS = 2_000_000
LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True, eq=False)
class MixtureFit:
    """One EM solution. ``collapsed`` marks a component shrunk onto a single observation."""

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    loglik: float
    iterations: int = 0
    trace: tuple[float, ...] = field(default=(), repr=False)
    collapsed: bool = False

    @property
    def n_components(self) -> int:
        return int(self.weights.size)


@dataclass(frozen=True, eq=False)
class MixtureProfile:
    """Best fit over restarts for ``1..K`` components."""

    fits: tuple[MixtureFit, ...]
    n: int
    floor: float

    @property
    def logliks(self) -> tuple[float, ...]:
        return tuple(fit.loglik for fit in self.fits)

    @property
    def max_components(self) -> int:
        return len(self.fits)


def default_variance_floor(data: np.ndarray, scale: float = DEFAULT_FLOOR_SCALE) -> float:
    """``scale`` times the sample variance (denominator n)."""
    variance = float(np.var(data))
    return scale * variance if variance > 0 else scale


def random_membership_init(n: int, n_components: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` rows drawn uniformly from the probability simplex."""
    if n < 1 or n_components < 1:
        raise DimensionError(f"Need n >= 1 and at least one component, got n={n}, i={n_components}")
    spacings = rng.standard_exponential((n, n_components))
    return spacings / spacings.sum(axis=1, keepdims=True)


@dataclass(frozen=True, eq=False)
class _EmBatch:
    """Final state of a block of EM runs, one row per restart."""

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    loglik: np.ndarray
    iterations: np.ndarray
    failed: np.ndarray
    collapsed: np.ndarray
    trace: np.ndarray

    def fit(self, row: int) -> MixtureFit:
        steps = int(self.iterations[row])
        return MixtureFit(
            weights=self.weights[row].copy(),
            means=self.means[row].copy(),
            variances=self.variances[row].copy(),
            loglik=float(self.loglik[row]),
            iterations=steps,
            trace=tuple(self.trace[row, : steps + 1].tolist()),
            collapsed=bool(self.collapsed[row]),
        )


def _component_log_density(
    x: np.ndarray, weights: np.ndarray, means: np.ndarray, variances: np.ndarray
) -> np.ndarray:
    """``log w_h + log N(x_t; mu_h, sigma_h^2)`` with shape ``(restarts, n, components)``."""
    centered = x[None, :, None] - means[:, None, :]
    return (
        np.log(weights)[:, None, :]
        - 0.5 * (LOG_2PI + np.log(variances))[:, None, :]
        - 0.5 * centered**2 / variances[:, None, :]
    )


def _m_step(
    x: np.ndarray, resp: np.ndarray, floor: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    totals = resp.sum(axis=1)
    safe = np.maximum(totals, MIN_RESPONSIBILITY)
    weights = totals / totals.sum(axis=1, keepdims=True)
    means = np.einsum("rnk,n->rk", resp, x) / safe
    centered = x[None, :, None] - means[:, None, :]
    variances = np.einsum("rnk,rnk->rk", resp, centered**2) / safe
    return totals, weights, means, np.maximum(variances, floor)


def _e_step(
    x: np.ndarray, weights: np.ndarray, means: np.ndarray, variances: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    log_joint = _component_log_density(x, weights, means, variances)
    log_norm = logsumexp(log_joint, axis=2)
    return log_norm.sum(axis=1), np.exp(log_joint - log_norm[:, :, None])


def _first_empty(totals: np.ndarray) -> np.ndarray:
    empty = totals < MIN_RESPONSIBILITY
    return np.where(empty.any(axis=1), empty.argmax(axis=1), -1)


def _em_batch(x: np.ndarray, init: np.ndarray, floor: float, tol: float, max_iter: int) -> _EmBatch:
    """EM from each ``init[r]``; a run stops on its own once its gain drops below ``tol``."""
    n_restarts, _, n_components = init.shape
    weights = np.full((n_restarts, n_components), np.nan)
    means = weights.copy()
    variances = weights.copy()
    loglik = np.full(n_restarts, -np.inf)
    iterations = np.zeros(n_restarts, dtype=int)
    failed = np.full(n_restarts, -1)
    trace = np.full((n_restarts, max_iter + 1), np.nan)

    active = np.arange(n_restarts)
    resp = init
    for iteration in range(max_iter + 1):
        if active.size == 0:
            break
        totals, w, m, v = _m_step(x, resp, floor)
        empty = _first_empty(totals)
        dead = empty >= 0
        failed[active[dead]] = empty[dead]
        live = ~dead
        active, w, m, v = active[live], w[live], m[live], v[live]

        ll, resp = _e_step(x, w, m, v)
        gain = ll - loglik[active]
        if iteration > 0 and gain.size and gain.min() < -1e-8:
            logger.warning("EM log-likelihood decreased by %.3g at iteration %d", -gain.min(), iteration)
        weights[active], means[active], variances[active] = w, m, v
        loglik[active] = ll
        iterations[active] = iteration
        trace[active, iteration] = ll

        keep = gain >= tol
        active, resp = active[keep], resp[keep]

    with np.errstate(invalid="ignore"):
        collapsed = ((variances <= floor) & (x.size * weights < MIN_SUPPORT)).any(axis=1)
    return _EmBatch(
        weights=weights,
        means=means,
        variances=variances,
        loglik=loglik,
        iterations=iterations,
        failed=failed,
        collapsed=collapsed,
        trace=trace,
    )


def mixture_loglik(
    data: np.ndarray, weights: np.ndarray, means: np.ndarray, variances: np.ndarray
) -> float:
    """Log-likelihood of ``data`` under one set of mixture parameters."""
    x = np.asarray(data, dtype=float).ravel()
    log_joint = _component_log_density(
        x,
        np.asarray(weights, dtype=float)[None, :],
        np.asarray(means, dtype=float)[None, :],
        np.asarray(variances, dtype=float)[None, :],
    )
    return float(logsumexp(log_joint, axis=2).sum())


def em_fit(
    data: np.ndarray,
    n_components: int,
    init: np.ndarray,
    floor: float,
    tol: float = 1e-8,
    max_iter: int = 1000,
) -> MixtureFit:
    """EM for a univariate mixture started from soft memberships.

    The first M-step uses ``init`` as responsibilities; variances are
    clamped at ``floor`` in every M-step.

    Raises:
        DegenerateComponentError: If a component's total responsibility drops below 1e-10.
    """
    x = np.asarray(data, dtype=float).ravel()
    if x.size < n_components:
        raise DimensionError(f"{x.size} observations cannot support {n_components} components")
    if init.shape != (x.size, n_components):
        raise DimensionError(f"init has shape {init.shape}, expected {(x.size, n_components)}")
    if not floor > 0:
        raise ValidationError(f"Variance floor must be positive, got {floor}")

    batch = _em_batch(x, np.asarray(init, dtype=float)[None], floor, tol, max_iter)
    if batch.failed[0] >= 0:
        component = int(batch.failed[0])
        raise DegenerateComponentError(
            f"Component {component} lost all responsibility", component=component
        )
    return batch.fit(0)


def _rank(fit: MixtureFit) -> tuple[bool, float]:
    return (not fit.collapsed, fit.loglik)


def _best_of_restarts(
    x: np.ndarray,
    n_components: int,
    restarts: int,
    seed: int,
    floor: float,
    tol: float,
    max_iter: int,
) -> MixtureFit:
    block = max(1, BATCH_ELEMENTS // (x.size * n_components))
    best: Optional[MixtureFit] = None
    for start in range(0, restarts, block):
        rows = range(start, min(start + block, restarts))
        init = np.stack(
            [
                random_membership_init(x.size, n_components, np.random.default_rng([seed, n_components, r]))
                for r in rows
            ]
        )
        batch = _em_batch(x, init, floor, tol, max_iter)
        ok = np.flatnonzero(batch.failed < 0)
        logger.debug(
            "%d components, restarts %d-%d: %d degenerated, %d collapsed",
            n_components,
            rows.start,
            rows.stop - 1,
            len(rows) - ok.size,
            int(batch.collapsed[ok].sum()),
        )
        if ok.size == 0:
            continue
        interior = ok[~batch.collapsed[ok]]
        pool = interior if interior.size else ok
        candidate = batch.fit(int(pool[np.argmax(batch.loglik[pool])]))
        if best is None or _rank(candidate) > _rank(best):
            best = candidate
    if best is None:
        raise DegenerateComponentError(
            f"All {restarts} restarts with {n_components} components degenerated",
            component=-1,
        )
    if best.collapsed:
        logger.warning(
            "Every restart with %d components collapsed a component onto a single observation",
            n_components,
        )
    return best


def fit_mixture_profile(
    data: np.ndarray,
    max_components: int,
    restarts: int = 500,
    floor: Optional[float] = None,
    seed: int = 0,
    threads: int = 1,
    tol: float = 1e-8,
    max_iter: int = 1000,
) -> MixtureProfile:
    """Best EM fit for every component count ``1..max_components``.

    Restart ``r`` for ``i`` components draws from the stream keyed by
    ``(seed, i, r)``, so results do not depend on ``threads``; ties keep the
    earliest restart.

    A fit with a component collapsed onto a single observation is a point
    on the floor boundary, not a local maximum of the likelihood. Such fits
    are kept only when every restart for that component count collapsed.
    """
    if restarts < 1:
        raise ValidationError(f"restarts must be at least 1, got {restarts}")
    if max_components < 1:
        raise ValidationError(f"max_components must be at least 1, got {max_components}")
    x = np.asarray(data, dtype=float).ravel()
    if x.size < max_components:
        raise DimensionError(f"{x.size} observations cannot support {max_components} components")
    floor = default_variance_floor(x) if floor is None else floor
    if not floor > 0:
        raise ValidationError(f"Variance floor must be positive, got {floor}")
    counts = range(1, max_components + 1)
    args = [(x, i, restarts, seed, floor, tol, max_iter) for i in counts]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            fits = list(pool.map(_best_of_restarts, *zip(*args)))
    else:
        fits = [_best_of_restarts(*a) for a in args]

    logliks = [fit.loglik for fit in fits]
    for i in range(1, len(logliks)):
        if logliks[i] < logliks[i - 1] - 1e-8:
            logger.warning(
                "Mixture profile not monotone: %d components %.6g < %d components %.6g",
                i + 1,
                logliks[i],
                i,
                logliks[i - 1],
            )
    return MixtureProfile(fits=tuple(fits), n=int(x.size), floor=floor)


def mixture_sbic_input(
    profile: MixtureProfile,
    n: Optional[int] = None,
    prior: Optional[Sequence[float]] = None,
) -> SbicInput:
    """Chain ``1 <= 2 <= ... <= K`` with the plug-in coefficient bounds."""
    counts = range(1, profile.max_components + 1)
    return build_chain_input(
        logliks=profile.logliks,
        n=profile.n if n is None else n,
        coefficient=lambda i, j: mixture_lambda_bound(i + 1, j + 1),
        dims=[mixture_model_dimension(i) for i in counts],
        labels=[str(i) for i in counts],
        prior=prior,
    )
