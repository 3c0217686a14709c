"""End-to-end properties of the solver, the families and the experiment harness."""

import math
from fractions import Fraction

import numpy as np
import pytest

from singular_bic.coefficients import (
    LearningCoefficient,
    fa_learning_coefficient,
    fa_model_dimension,
    format_rational,
)
from singular_bic.datasets import galaxies_dataset
from singular_bic.errors import NonConvergenceError
from singular_bic.experiments import SelectionFrequencies, run_rrr_experiment
from singular_bic.families.mixture import fit_mixture_profile, mixture_sbic_input
from singular_bic.poset import ModelPoset
from singular_bic.solver import SbicInput, build_chain_input, fixed_point_oracle, residual, solve
from singular_bic.types import ExperimentConfig, ModelCollectionFile
from tests.conftest import random_chain, random_input, stacked_diamonds

TRIALS = 100


def _random_poset(rng: np.random.Generator) -> ModelPoset:
    if rng.random() < 0.5:
        return random_chain(rng, int(rng.integers(1, 13)))
    return stacked_diamonds(int(rng.integers(1, 4)))


class TestSolverCorrectness:
    """Randomized chains and diamonds with up to twelve models."""

    def test_random_inputs(self, rng: np.random.Generator) -> None:
        """Test solver invariants on many random posets."""
        for _ in range(TRIALS):
            data = random_input(rng, _random_poset(rng))
            result = solve(data)
            assert residual(data, result) < 1e-9
            assert all(math.isfinite(v) for v in result.sbic.values())
            for label in data.poset.ids:
                row = [v for (i, _), v in result.log_lprime.items() if i == label]
                assert min(row) - 1e-9 <= result.sbic[label] <= max(row) + 1e-9
            try:
                oracle = fixed_point_oracle(data)
            except NonConvergenceError:
                continue
            for label in data.poset.ids:
                assert oracle[label] == pytest.approx(result.sbic[label], abs=1e-8)


class TestRegularReduction:
    """Coefficients equal to half the dimension reproduce BIC."""

    def test_single_models(self, rng: np.random.Generator) -> None:
        """Test that a lone regular model scores its BIC."""
        for _ in range(TRIALS):
            dim = int(rng.integers(0, 40))
            data = build_chain_input(
                logliks=[float(rng.uniform(-1e4, 0))],
                n=int(rng.integers(3, 10_000)),
                coefficient=lambda i, j, d=dim: LearningCoefficient(Fraction(d, 2)),
                dims=[dim],
                labels=["0"],
            )
            result = solve(data)
            assert abs(result.sbic["0"] - result.bic["0"]) < 1e-10

    def test_chains(self, rng: np.random.Generator) -> None:
        """Test random chains against the fixed-point oracle."""
        for _ in range(TRIALS):
            size = int(rng.integers(2, 13))
            dims = np.cumsum(rng.integers(1, 6, size)).tolist()
            data = build_chain_input(
                logliks=rng.uniform(-2000, 0, size).tolist(),
                n=int(rng.integers(3, 10_000)),
                coefficient=lambda i, j, d=dims: LearningCoefficient(Fraction(d[i], 2)),
                dims=dims,
                labels=[str(k) for k in range(size)],
            )
            result = solve(data)
            for label in data.poset.ids:
                assert abs(result.sbic[label] - result.bic[label]) < 1e-10


class TestEquivariance:
    def test_loglik_shift(self, rng: np.random.Generator) -> None:
        """Test that shifting every log-likelihood shifts every score."""
        for _ in range(TRIALS):
            data = random_input(rng, _random_poset(rng))
            c = float(rng.uniform(-1000, 1000))
            shifted = SbicInput(
                poset=data.poset,
                loglik={k: v + c for k, v in data.loglik.items()},
                n=data.n,
                coefficients=data.coefficients,
                dims=data.dims,
            )
            a, b = solve(data), solve(shifted)
            for label in data.poset.ids:
                assert b.sbic[label] - a.sbic[label] == pytest.approx(c, abs=1e-9)
                assert b.bic[label] - a.bic[label] == pytest.approx(c, abs=1e-9)

    def test_prior_rescaling(self, rng: np.random.Generator) -> None:
        """Test that scaling the prior leaves the scores unchanged."""
        for _ in range(TRIALS):
            poset = _random_poset(rng)
            weights = rng.uniform(0.1, 10, len(poset)).tolist()
            data = random_input(rng, poset, prior=weights)
            scale = float(rng.uniform(0.01, 100))
            scaled = SbicInput(
                poset=data.poset,
                loglik=data.loglik,
                n=data.n,
                coefficients=data.coefficients,
                dims=data.dims,
                prior={label: scale * w for label, w in zip(poset.ids, weights)},
            )
            a, b = solve(data), solve(scaled)
            for label in poset.ids:
                assert a.sbic[label] == pytest.approx(b.sbic[label], abs=1e-10)


class TestFactorTablePipeline:
    """The tabulated factor-analysis coefficients fed through a model collection document."""

    def _document(self, rng: np.random.Generator) -> dict[str, object]:
        logliks = np.sort(rng.uniform(-3000, -1000, 4))
        return {
            "n": int(rng.integers(20, 5000)),
            "models": [
                {"id": str(i), "loglik": float(logliks[i]), "dim": fa_model_dimension(6, i)} for i in range(4)
            ],
            "order": [[str(i), str(i + 1)] for i in range(3)],
            "coefficients": [
                {"i": str(i), "j": str(j), "lambda": format_rational(fa_learning_coefficient(i, j).lam)}
                for i in range(4)
                for j in range(i + 1)
            ],
        }

    def test_posteriors_and_penalties(self, rng: np.random.Generator) -> None:
        """Test posterior normalization and penalty bounds."""
        for _ in range(TRIALS):
            data = ModelCollectionFile.model_validate(self._document(rng)).to_sbic_input()
            result = solve(data)
            assert sum(result.posterior_sbic.values()) == pytest.approx(1.0, abs=1e-12)
            for label in data.poset.ids:
                assert result.penalty[label] <= 0.5 * data.dims[label] * math.log(data.n) + 1e-9
                assert result.sbic[label] >= result.bic[label] - 1e-9


@pytest.fixture(scope="module")
def rank_selection() -> SelectionFrequencies:
    config = ExperimentConfig(
        n_rows=10,
        n_cols=15,
        true_singular_values=[1.25, 1.0, 0.75, 0.5],
        sample_sizes=[100, 150, 200, 300, 500],
        replicates=100,
        master_seed=2024,
    )
    return run_rrr_experiment(config)


class TestRankSelection:
    """Scaled rank-selection study: true rank 4 in a 10 x 15 coefficient matrix."""

    def test_sbic_finds_true_rank_more_often(self, rank_selection: SelectionFrequencies) -> None:
        """Test that sBIC recovers the true rank more often than BIC."""
        counts = rank_selection.counts
        assert counts[(150, "sbic")][4] > counts[(150, "bic")][4]

    def test_bic_underestimates_at_small_n(self, rank_selection: SelectionFrequencies) -> None:
        """Test that BIC favours too small a rank at small samples."""
        for n in (100, 150, 200):
            assert rank_selection.modal_rank(n, "bic") <= 3

    def test_both_agree_at_large_n(self, rank_selection: SelectionFrequencies) -> None:
        """Test that both criteria settle on the true rank at large samples."""
        assert rank_selection.modal_rank(500, "bic") == 4
        assert rank_selection.modal_rank(500, "sbic") == 4

    def test_sbic_mean_rank_dominates(self, rank_selection: SelectionFrequencies) -> None:
        """Test that the mean sBIC rank sits closer to the truth."""
        for n in rank_selection.sample_sizes:
            assert rank_selection.mean_rank(n, "sbic") >= rank_selection.mean_rank(n, "bic")

    def test_sbic_entropy_decreases(self, rank_selection: SelectionFrequencies) -> None:
        """Test that sBIC selection entropy falls as the sample grows."""
        table = rank_selection.entropy_table().set_index(["sample_size", "criterion"])["entropy"]
        assert table[(500, "sbic")] < table[(100, "sbic")]


@pytest.mark.slow
def test_galaxies_component_selection() -> None:
    """Test component selection on the galaxy velocities."""
    profile = fit_mixture_profile(galaxies_dataset(), 10, restarts=500, seed=0)
    result = solve(mixture_sbic_input(profile))
    assert result.selected("bic") == "3"
    assert result.selected("sbic") in {"5", "6", "7"}
    assert sum(result.posterior_sbic[str(k)] for k in range(5, 9)) > 0.9
