"""Reduced-rank regression with identity error and covariate covariances.

Observations are columns: ``y1`` is ``N x n`` (responses) and ``y2`` is
``M x n`` (covariates). Model ``i`` constrains the ``N x M`` coefficient
matrix to rank at most ``i``.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Optional

import numpy as np

from singular_bic.coefficients import rrr_learning_coefficient, rrr_model_dimension
from singular_bic.errors import DimensionError, RankRangeError, SingularDesignError, ValidationError
from singular_bic.solver import SbicInput, build_chain_input

logger = logging.getLogger(__name__)

MAX_CONDITION = 1e12
EIGENVALUE_CLAMP = 1e-12


@dataclass(frozen=True, eq=False)
class RrrData:
    y1: np.ndarray
    y2: np.ndarray

    def __post_init__(self) -> None:
        if self.y1.ndim != 2 or self.y2.ndim != 2 or self.y1.shape[1] != self.y2.shape[1]:
            raise DimensionError(
                f"y1 and y2 must be matrices with equal column counts, got {self.y1.shape} and {self.y2.shape}"
            )
        if self.n < 1:
            raise DimensionError("Need at least one observation")
        if np.isnan(self.y1).any() or np.isnan(self.y2).any():
            raise ValidationError("Data contain NaN entries")

    @property
    def n(self) -> int:
        return int(self.y1.shape[1])

    @property
    def shape(self) -> tuple[int, int]:
        """``(N, M)``."""
        return int(self.y1.shape[0]), int(self.y2.shape[0])


@dataclass(frozen=True, eq=False)
class RrrProfile:
    """Maximized log-likelihoods and estimates for ranks ``0..max_rank``."""

    logliks: tuple[float, ...]
    estimates: tuple[np.ndarray, ...]
    n_rows: int
    n_cols: int
    n: int

    @property
    def max_rank(self) -> int:
        return len(self.logliks) - 1


def _haar_columns(size: int, count: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((size, size)))
    q = q * np.sign(np.diag(r))
    return q[:, :count]


def simulate_coefficient_matrix(
    n_rows: int,
    n_cols: int,
    singular_values: Sequence[float],
    rng: np.random.Generator,
) -> np.ndarray:
    """``U diag(s) V^T`` with Haar-distributed orthonormal ``U`` and ``V``.

    Raises:
        DimensionError: If there are more singular values than ``min(N, M)``,
            or they are not positive and nonincreasing.
    """
    s = np.asarray(singular_values, dtype=float)
    rank = s.size
    if rank > min(n_rows, n_cols):
        raise DimensionError(f"{rank} singular values for a {n_rows}x{n_cols} matrix")
    if rank and (np.any(s <= 0) or np.any(np.diff(s) > 0)):
        raise DimensionError(f"Singular values must be positive and nonincreasing, got {s.tolist()}")
    if rank == 0:
        return np.zeros((n_rows, n_cols))
    u = _haar_columns(n_rows, rank, rng)
    v = _haar_columns(n_cols, rank, rng)
    return (u * s) @ v.T


def simulate_data(pi: np.ndarray, n: int, rng: np.random.Generator) -> RrrData:
    """Draw ``y2 ~ N(0, I_M)`` and ``y1 = pi y2 + N(0, I_N)`` column-wise."""
    if n < 1:
        raise DimensionError(f"Need n >= 1, got {n}")
    n_rows, n_cols = pi.shape
    y2 = rng.standard_normal((n_cols, n))
    y1 = pi @ y2 + rng.standard_normal((n_rows, n))
    return RrrData(y1=y1, y2=y2)


def _joint_loglik(residual: np.ndarray, y2: np.ndarray) -> float:
    n_rows, n = residual.shape
    n_cols = y2.shape[0]
    return (
        -0.5 * float(np.sum(residual**2))
        - 0.5 * float(np.sum(y2**2))
        - 0.5 * n * (n_rows + n_cols) * math.log(2 * math.pi)
    )


def fit_profile(data: RrrData, max_rank: Optional[int] = None) -> RrrProfile:
    """Maximum likelihood for every rank up to ``max_rank``.

    With ``C`` the least-squares coefficient and ``R = (y2 y2^T)^(1/2)``,
    the rank-``i`` estimate truncates the SVD of ``C R`` to ``i`` terms and
    maps back with ``R^-1``.

    Raises:
        RankRangeError: If ``max_rank > min(N, M)``.
        SingularDesignError: If ``y2 y2^T`` is singular or too ill-conditioned.
    """
    n_rows, n_cols = data.shape
    top = min(n_rows, n_cols)
    max_rank = top if max_rank is None else max_rank
    if not 0 <= max_rank <= top:
        raise RankRangeError(f"max_rank must lie in [0, {top}], got {max_rank}")
    if data.n < n_cols:
        raise SingularDesignError(
            f"Need at least M={n_cols} observations, got {data.n}", condition=math.inf
        )

    gram = data.y2 @ data.y2.T
    eigvals, eigvecs = np.linalg.eigh(gram)
    condition = math.inf if eigvals[0] <= 0 else float(eigvals[-1] / eigvals[0])
    if condition > MAX_CONDITION:
        raise SingularDesignError(
            f"Covariate Gram matrix is numerically singular (condition {condition:.3g})",
            condition=condition,
        )
    coef = np.linalg.solve(gram, data.y2 @ data.y1.T).T
    root = np.sqrt(np.maximum(eigvals, EIGENVALUE_CLAMP))
    sqrt_gram = (eigvecs * root) @ eigvecs.T
    inv_sqrt_gram = (eigvecs / root) @ eigvecs.T
    u, s, vt = np.linalg.svd(coef @ sqrt_gram, full_matrices=False)

    logliks: list[float] = []
    estimates: list[np.ndarray] = []
    for i in range(max_rank + 1):
        estimate = ((u[:, :i] * s[:i]) @ vt[:i]) @ inv_sqrt_gram
        estimates.append(estimate)
        logliks.append(_joint_loglik(data.y1 - estimate @ data.y2, data.y2))

    drops = np.flatnonzero(np.diff(logliks) < -1e-8 * max(1.0, abs(logliks[0])))
    if drops.size:
        logger.warning("Rank profile decreases after rank(s) %s", drops.tolist())
    return RrrProfile(
        logliks=tuple(logliks),
        estimates=tuple(estimates),
        n_rows=n_rows,
        n_cols=n_cols,
        n=data.n,
    )


def rrr_sbic_input(
    profile: RrrProfile,
    n_rows: Optional[int] = None,
    n_cols: Optional[int] = None,
    n: Optional[int] = None,
    prior: Optional[Sequence[float]] = None,
) -> SbicInput:
    """Chain ``0 <= 1 <= ... <= max_rank`` with exact rank coefficients."""
    n_rows = profile.n_rows if n_rows is None else n_rows
    n_cols = profile.n_cols if n_cols is None else n_cols
    n = profile.n if n is None else n
    ranks = range(profile.max_rank + 1)
    return build_chain_input(
        logliks=profile.logliks,
        n=n,
        coefficient=lambda i, j: rrr_learning_coefficient(n_rows, n_cols, i, j),
        dims=[rrr_model_dimension(n_rows, n_cols, i) for i in ranks],
        labels=[str(i) for i in ranks],
        prior=prior,
    )
