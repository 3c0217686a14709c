"""Pytest configuration and shared fixtures."""

import os
from collections.abc import Callable, Sequence
from fractions import Fraction
from typing import Optional

import numpy as np
import pytest

from singular_bic.coefficients import CoefficientMatrix, LearningCoefficient, rrr_learning_coefficient
from singular_bic.poset import ModelPoset, build_poset
from singular_bic.solver import SbicInput, build_chain_input

InputFactory = Callable[..., SbicInput]


def pytest_configure(config: pytest.Config) -> None:
    """Register custom markers."""
    config.addinivalue_line("markers", "slow: marks tests as slow (run with --slow or SBIC_SLOW_TESTS=1)")


def pytest_collection_modifyitems(config: pytest.Config, items: list[pytest.Item]) -> None:
    """Skip slow tests unless explicitly enabled."""
    if config.getoption("--slow", default=False) or os.getenv("SBIC_SLOW_TESTS") == "1":
        return
    skip_slow = pytest.mark.skip(reason="Slow tests disabled. Use --slow flag or SBIC_SLOW_TESTS=1")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def pytest_addoption(parser: pytest.Parser) -> None:
    """Add command-line options."""
    parser.addoption(
        "--slow",
        action="store_true",
        default=False,
        help="Run multi-minute reproductions (galaxies analysis, full experiment grids)",
    )


def random_input(
    rng: np.random.Generator,
    poset: ModelPoset,
    n: Optional[int] = None,
    prior: Optional[Sequence[float]] = None,
) -> SbicInput:
    """Valid input on ``poset`` with increasing dimensions and ``lam_ij = (d_i + d_j) / 4``."""
    size = len(poset)
    depth = poset.leq.sum(axis=0)
    dims = {label: int(2 * depth[k] + rng.integers(0, 3)) for k, label in enumerate(poset.ids)}
    # make dimensions strictly increase along the order
    for k, label in enumerate(poset.ids):
        below = [poset.ids[int(j)] for j in poset.down_indices(k, strict=True)]
        if below:
            dims[label] = max(dims[label], max(dims[b] for b in below) + 1)
    entries = {}
    for i, j in poset.pairs():
        m = int(rng.integers(1, 3)) if dims[i] >= 2 else 1
        entries[(i, j)] = LearningCoefficient(Fraction(dims[i] + dims[j], 4), m)
    return SbicInput(
        poset=poset,
        loglik={label: float(rng.uniform(-500.0, 0.0)) for label in poset.ids},
        n=int(n if n is not None else rng.integers(3, 5000)),
        coefficients=CoefficientMatrix(entries=entries),
        dims=dims,
        prior=None if prior is None else dict(zip(poset.ids, prior)),
    )


def random_chain(rng: np.random.Generator, size: int) -> ModelPoset:
    labels = [str(k) for k in range(size)]
    return build_poset(labels, zip(labels[:-1], labels[1:]))


def diamond() -> ModelPoset:
    return build_poset(["0", "1", "2", "3"], [("0", "1"), ("0", "2"), ("1", "3"), ("2", "3")])


def stacked_diamonds(count: int) -> ModelPoset:
    """``count`` diamonds glued top to bottom: ``3k + 1`` models."""
    labels = [str(k) for k in range(3 * count + 1)]
    covers = []
    for d in range(count):
        bottom, left, right, top = 3 * d, 3 * d + 1, 3 * d + 2, 3 * d + 3
        covers += [(str(bottom), str(left)), (str(bottom), str(right)), (str(left), str(top)), (str(right), str(top))]
    return build_poset(labels, covers)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240601)


@pytest.fixture
def rank_chain_input() -> SbicInput:
    """Rank chain 0..3 for 5x3 reduced-rank regression with synthetic log-likelihoods."""
    return build_chain_input(
        logliks=[-812.0, -640.5, -601.25, -599.0],
        n=200,
        coefficient=lambda i, j: rrr_learning_coefficient(5, 3, i, j),
        dims=[i * (5 + 3 - i) for i in range(4)],
        labels=["0", "1", "2", "3"],
    )


@pytest.fixture
def make_input(rng: np.random.Generator) -> InputFactory:
    def _make(poset: ModelPoset, **kwargs: object) -> SbicInput:
        return random_input(rng, poset, **kwargs)  # type: ignore[arg-type]

    return _make
