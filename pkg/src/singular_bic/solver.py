"""BIC, singular BIC and approximate posterior model probabilities.

Everything is computed with logarithms. For model ``i`` the quantities

    log L'_ij = loglik_i - lam_ij * log(n) + (m_ij - 1) * log(log(n))

are combined over the down-set of ``i`` by solving, model by model along a
linear extension, the quadratic ``x^2 + b_i x - c_i = 0`` for its positive
root ``x = L'(M_i)``. Before exponentiating, each model's terms are shifted
by their maximum, which rescales ``b_i`` by ``e^-K`` and ``c_i`` by ``e^-2K``.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np
import pandas as pd
from scipy.special import logsumexp

from singular_bic.coefficients import (
    CoefficientMatrix,
    LearningCoefficient,
    validate_matrix,
)
from singular_bic.errors import (
    NonConvergenceError,
    NonFiniteError,
    SampleSizeError,
    UnknownIdError,
    ValidationError,
)
from singular_bic.poset import ModelId, ModelPoset, ModelRef, chain_poset, linear_extension

logger = logging.getLogger(__name__)

Criterion = Literal["bic", "sbic"]

_LOG_2 = math.log(2.0)


def _check_sample_size(n: int) -> None:
    if isinstance(n, bool) or int(n) != n:
        raise SampleSizeError(f"Sample size must be an integer, got {n!r}")
    if n < 3:
        raise SampleSizeError(f"Sample size must be at least 3, got {n}", details={"n": n})


@dataclass(frozen=True, eq=False)
class SbicInput:
    """Everything the solver needs for one data set.

    ``prior`` holds positive weights that need not sum to one; ``None``
    means uniform. The stored prior is the normalized one.
    """

    poset: ModelPoset
    loglik: Mapping[ModelId, float]
    n: int
    coefficients: CoefficientMatrix
    dims: Mapping[ModelId, int]
    prior: Optional[Mapping[ModelId, float]] = None
    warnings: list[str] = field(init=False, default_factory=list)

    def __post_init__(self) -> None:
        _check_sample_size(self.n)
        ids = self.poset.ids
        for name, mapping in (("loglik", self.loglik), ("dims", self.dims)):
            for label in mapping:
                if label not in self.poset:
                    raise UnknownIdError(label)
            missing = [label for label in ids if label not in mapping]
            if missing:
                raise ValidationError(
                    f"Missing {name} for models: {', '.join(missing)}", field=name
                )
        for label in ids:
            if not math.isfinite(self.loglik[label]):
                raise NonFiniteError(
                    f"Log-likelihood of model {label} is not finite: {self.loglik[label]}"
                )

        weights = {label: 1.0 for label in ids} if self.prior is None else dict(self.prior)
        for label in weights:
            if label not in self.poset:
                raise UnknownIdError(label)
        for label in ids:
            w = weights.get(label)
            if w is None or not math.isfinite(w) or w <= 0:
                raise ValidationError(
                    f"Prior weight of model {label} must be a positive number, got {w!r}",
                    field="prior",
                )
        total = math.fsum(weights[label] for label in ids)
        object.__setattr__(self, "prior", {label: weights[label] / total for label in ids})

        report = validate_matrix(self.poset, self.coefficients, self.dims)
        report.raise_for_errors()
        for message in report.warnings:
            logger.warning("Coefficient check: %s", message)
        self.warnings.extend(report.warnings)

    @property
    def log_n(self) -> float:
        return math.log(self.n)

    def loglik_vector(self) -> np.ndarray:
        return np.array([float(self.loglik[label]) for label in self.poset.ids])

    def dims_vector(self) -> np.ndarray:
        return np.array([int(self.dims[label]) for label in self.poset.ids], dtype=float)

    def log_prior_vector(self) -> np.ndarray:
        assert self.prior is not None
        return np.log([self.prior[label] for label in self.poset.ids])

    def log_lprime_matrix(self) -> np.ndarray:
        """``log L'_ij`` at ``[i, j]``; ``-inf`` where ``j`` is not below ``i``."""
        ids = self.poset.ids
        out = np.full((len(ids), len(ids)), -np.inf)
        for (i, j), coef in self.coefficients.items():
            out[self.poset.index(i), self.poset.index(j)] = log_lprime_ij(
                self.loglik[i], self.n, coef
            )
        return out


def build_chain_input(
    logliks: Sequence[float],
    n: int,
    coefficient: Callable[[int, int], LearningCoefficient],
    dims: Sequence[int],
    labels: Sequence[ModelId],
    prior: Optional[Sequence[float]] = None,
) -> SbicInput:
    """Input for a chain ``labels[0] <= labels[1] <= ...``.

    ``coefficient(i, j)`` and the sequences are indexed by chain position.
    """
    if not len(logliks) == len(dims) == len(labels):
        raise ValidationError("logliks, dims and labels must have equal length")
    if prior is not None and len(prior) != len(labels):
        raise ValidationError(
            f"Expected {len(labels)} prior weights, got {len(prior)}", field="prior"
        )
    poset = chain_poset(labels)
    return SbicInput(
        poset=poset,
        loglik=dict(zip(poset.ids, map(float, logliks))),
        n=n,
        coefficients=CoefficientMatrix.from_function(poset, coefficient),
        dims=dict(zip(poset.ids, map(int, dims))),
        prior=None if prior is None else dict(zip(poset.ids, map(float, prior))),
    )


def log_lprime_ij(loglik_i: float, n: int, coef: LearningCoefficient) -> float:
    """``log L'_ij = loglik_i - lam log n + (m - 1) log log n``.

    Raises:
        SampleSizeError: If ``n < 3``.
    """
    _check_sample_size(n)
    log_n = math.log(n)
    return float(loglik_i) - float(coef.lam) * log_n + (coef.multiplicity - 1) * math.log(log_n)


def bic(data: SbicInput, i: ModelRef) -> float:
    """Schwarz's criterion ``loglik_i - d_i/2 log n``."""
    label = data.poset.ids[data.poset.index(i)]
    return float(data.loglik[label]) - 0.5 * data.dims[label] * data.log_n


def posterior_probabilities(scores: Mapping[ModelId, float]) -> dict[ModelId, float]:
    """Exponentiate and renormalize log-scale scores.

    Raises:
        NonFiniteError: If any score is NaN or infinite.
    """
    labels = list(scores)
    values = np.array([scores[label] for label in labels], dtype=float)
    if values.size == 0 or not np.all(np.isfinite(values)):
        raise NonFiniteError("Posterior probabilities need finite scores", details=dict(scores))
    probs = np.exp(values - logsumexp(values))
    probs /= probs.sum()
    return dict(zip(labels, probs.tolist()))


@dataclass(frozen=True)
class SbicResult:
    """Per-model scores; all dicts are keyed by model label in poset order."""

    ids: tuple[ModelId, ...]
    n: int
    loglik: dict[ModelId, float]
    sbic: dict[ModelId, float]
    bic: dict[ModelId, float]
    penalty: dict[ModelId, float]
    log_lprime: dict[tuple[ModelId, ModelId], float]
    posterior_sbic: dict[ModelId, float]
    posterior_bic: dict[ModelId, float]

    def scores(self, criterion: Criterion) -> dict[ModelId, float]:
        if criterion == "sbic":
            return self.sbic
        if criterion == "bic":
            return self.bic
        raise ValueError(f"Unknown criterion: {criterion!r}")

    def posterior(self, criterion: Criterion) -> dict[ModelId, float]:
        return self.posterior_sbic if criterion == "sbic" else self.posterior_bic

    def selected(self, criterion: Criterion) -> ModelId:
        """Maximizing model; ties go to the model listed first."""
        scores = self.scores(criterion)
        return max(self.ids, key=lambda label: (scores[label], -self.ids.index(label)))

    def log_bayes_factor(self, i: ModelId, k: ModelId, criterion: Criterion = "sbic") -> float:
        """Approximate log Bayes factor of model ``i`` against model ``k``."""
        scores = self.scores(criterion)
        for label in (i, k):
            if label not in scores:
                raise UnknownIdError(label)
        return scores[i] - scores[k]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "id": list(self.ids),
                "loglik": [self.loglik[label] for label in self.ids],
                "bic": [self.bic[label] for label in self.ids],
                "sbic": [self.sbic[label] for label in self.ids],
                "penalty": [self.penalty[label] for label in self.ids],
                "posterior_bic": [self.posterior_bic[label] for label in self.ids],
                "posterior_sbic": [self.posterior_sbic[label] for label in self.ids],
            }
        )


def _log_positive_root(b: float, log_c: float) -> float:
    """Log of the positive root of ``x^2 + b x - c``, given ``log c``."""
    c = math.exp(log_c)
    if b > 0:
        return _LOG_2 + log_c - math.log(b + math.sqrt(b * b + 4.0 * c))
    if b < 0:
        return math.log(0.5 * (-b + math.sqrt(b * b + 4.0 * c)))
    return 0.5 * log_c


def _require_finite(values: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(values)):
        raise NonFiniteError(f"Non-finite {what} encountered", details={what: values.tolist()})


def solve(data: SbicInput) -> SbicResult:
    """Solve the singular BIC equation system.

    Minimal models get ``log L'_ii``, i.e. their BIC-type value. Every other
    model is solved after all of its strict submodels.

    Raises:
        NonFiniteError: If an intermediate value is NaN or infinite.
    """
    poset = data.poset
    log_lp = data.log_lprime_matrix()
    log_prior = data.log_prior_vector()
    log_sbic = np.full(len(poset), np.nan)

    for label in linear_extension(poset):
        i = poset.index(label)
        below = poset.down_indices(i, strict=True)
        if below.size == 0:
            log_sbic[i] = log_lp[i, i]
            continue
        log_weights = log_sbic[below] + log_prior[below] - log_prior[i]
        shift = max(log_lp[i, i], log_lp[i, below].max(), log_weights.max())
        _require_finite(np.array([shift]), "shift")
        b = float(np.exp(log_weights - shift).sum() - math.exp(log_lp[i, i] - shift))
        log_c = float(logsumexp(log_lp[i, below] + log_weights)) - 2.0 * shift
        log_sbic[i] = shift + _log_positive_root(b, log_c)
        logger.debug("model %s: b=%.6g log c=%.6g shift=%.6g", label, b, log_c, shift)

    _require_finite(log_sbic, "sbic")
    ids = poset.ids
    loglik = data.loglik_vector()
    bic_values = loglik - 0.5 * data.dims_vector() * data.log_n
    sbic = dict(zip(ids, log_sbic.tolist()))
    bics = dict(zip(ids, bic_values.tolist()))
    log_lprime = {
        (ids[i], ids[int(j)]): float(log_lp[i, j])
        for i in range(len(ids))
        for j in poset.down_indices(i)
    }
    return SbicResult(
        ids=ids,
        n=data.n,
        loglik=dict(zip(ids, loglik.tolist())),
        sbic=sbic,
        bic=bics,
        penalty=dict(zip(ids, (loglik - log_sbic).tolist())),
        log_lprime=log_lprime,
        posterior_sbic=posterior_probabilities(
            {label: sbic[label] + lp for label, lp in zip(ids, log_prior)}
        ),
        posterior_bic=posterior_probabilities(
            {label: bics[label] + lp for label, lp in zip(ids, log_prior)}
        ),
    )


def residual(data: SbicInput, result: SbicResult) -> float:
    """Largest relative residual of the equation system over all models.

    For model ``i`` this is
    ``|sum_j [L'(M_i) - L'_ij] L'(M_j) P(M_j)| / sum_j L'(M_i) L'(M_j) P(M_j)``
    with ``j`` ranging over the down-set of ``i``.
    """
    poset = data.poset
    log_lp = data.log_lprime_matrix()
    log_prior = data.log_prior_vector()
    x = np.array([result.sbic[label] for label in poset.ids])
    worst = 0.0
    for i in range(len(poset)):
        down = poset.down_indices(i)
        weights = x[down] + log_prior[down]
        own = x[i] + weights
        approx = log_lp[i, down] + weights
        shift = max(own.max(), approx.max())
        total = np.exp(own - shift).sum()
        worst = max(worst, abs(total - np.exp(approx - shift).sum()) / total)
    return float(worst)


def fixed_point_oracle(
    data: SbicInput,
    iterations: int = 10_000,
    tol: float = 1e-12,
    damping: float = 0.5,
) -> dict[ModelId, float]:
    """Solve the system by iterating its weighted-average form.

    Starts from ``log L'_ii`` and repeatedly replaces each ``L'(M_i)`` by
    the prior- and ``L'``-weighted average of ``L'_ij`` over its down-set,
    mixed with the previous value (``damping`` is the weight kept). Meant
    as an independent check on :func:`solve`.

    Raises:
        NonConvergenceError: If the last sweep still moved some log value by more than 1e-10.
    """
    if iterations < 1:
        raise ValueError("iterations must be at least 1")
    if not 0.0 <= damping < 1.0:
        raise ValueError("damping must lie in [0, 1)")
    poset = data.poset
    log_lp = data.log_lprime_matrix()
    log_prior = data.log_prior_vector()
    order = [poset.index(label) for label in linear_extension(poset)]
    x = np.diag(log_lp).copy()
    log_keep = math.log(damping) if damping > 0 else -math.inf
    log_move = math.log(1.0 - damping)

    change = math.inf
    for _ in range(iterations):
        change = 0.0
        for i in order:
            down = poset.down_indices(i)
            w = x[down] + log_prior[down]
            target = float(logsumexp(log_lp[i, down] + w) - logsumexp(w))
            new = float(np.logaddexp(log_keep + x[i], log_move + target))
            change = max(change, abs(new - x[i]))
            x[i] = new
        if change <= tol:
            break
    if change > 1e-10:
        raise NonConvergenceError(
            f"Fixed-point iteration did not converge in {iterations} sweeps (last change {change:.3g})",
            iterations=iterations,
        )
    return dict(zip(poset.ids, x.tolist()))
