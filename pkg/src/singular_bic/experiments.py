"""Monte Carlo harness for rank selection and factor-count subsampling studies."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd
from scipy import stats

from singular_bic.errors import EmptyError, OutputError, SampleSizeError, SchemaError, ValidationError
from singular_bic.families.factor import fa_fit_profile, fa_sbic_input, sample_covariance
from singular_bic.families.rrr import fit_profile, rrr_sbic_input, simulate_coefficient_matrix, simulate_data
from singular_bic.solver import Criterion, solve
from singular_bic.types import ExperimentConfig

logger = logging.getLogger(__name__)

CRITERIA: tuple[Criterion, ...] = ("bic", "sbic")
FREQUENCY_COLUMNS = ["sample_size", "criterion", "rank", "count", "relative_frequency"]
ENTROPY_COLUMNS = ["sample_size", "criterion", "entropy"]
FLOAT_FORMAT = "%.12g"


def entropy(counts: Sequence[float]) -> float:
    """Shannon entropy (nats) of the relative frequencies, with ``0 ln 0 = 0``.

    Raises:
        EmptyError: If there are no counts or they are all zero.
        ValidationError: If a count is negative.
    """
    values = np.asarray(counts, dtype=float)
    if values.size == 0 or not values.any():
        raise EmptyError("Entropy of an empty frequency table is undefined")
    if np.any(values < 0):
        raise ValidationError(f"Counts must be nonnegative, got {values.tolist()}")
    return float(stats.entropy(values))


@dataclass(frozen=True, eq=False)
class SelectionFrequencies:
    """How often each rank was selected, per sample size and criterion.

    ``counts[(n, criterion)][r]`` is the number of replicates at sample size
    ``n`` whose ``criterion`` maximizer was rank ``r``. ``selections`` keeps
    the per-replicate choices when the frequencies come from a run.
    """

    counts: dict[tuple[int, str], np.ndarray]
    selections: Optional[pd.DataFrame] = None

    def __post_init__(self) -> None:
        if not self.counts:
            raise EmptyError("No selection counts")
        sizes = {len(c) for c in self.counts.values()}
        if len(sizes) != 1:
            raise ValidationError("Every count vector must cover the same ranks")
        for n in self.sample_sizes:
            if any((n, c) not in self.counts for c in CRITERIA):
                raise ValidationError(f"Counts at n={n} must cover both criteria")
            if len({int(self.counts[(n, c)].sum()) for c in CRITERIA}) != 1:
                raise ValidationError(f"Counts at n={n} differ in total between criteria")

    @classmethod
    def from_selections(cls, selections: pd.DataFrame, max_rank: int) -> SelectionFrequencies:
        """Aggregate a ``sample_size, replicate, bic, sbic`` table."""
        counts = {
            (int(n), criterion): np.bincount(group[criterion].to_numpy(dtype=int), minlength=max_rank + 1)
            for n, group in selections.groupby("sample_size", sort=True)
            for criterion in CRITERIA
        }
        return cls(counts=counts, selections=selections)

    @property
    def sample_sizes(self) -> list[int]:
        return sorted({n for n, _ in self.counts})

    @property
    def max_rank(self) -> int:
        return len(next(iter(self.counts.values()))) - 1

    def replicates(self, n: int) -> int:
        return int(self.counts[(n, "bic")].sum())

    def relative(self, n: int, criterion: Criterion) -> np.ndarray:
        c = self.counts[(n, criterion)]
        return c / c.sum()

    def modal_rank(self, n: int, criterion: Criterion) -> int:
        """Most frequently selected rank; ties go to the smaller rank."""
        return int(np.argmax(self.counts[(n, criterion)]))

    def mean_rank(self, n: int, criterion: Criterion) -> float:
        return float(np.arange(self.max_rank + 1) @ self.relative(n, criterion))

    def entropy_table(self) -> pd.DataFrame:
        rows = [
            (n, criterion, entropy(self.counts[(n, criterion)]))
            for n in self.sample_sizes
            for criterion in CRITERIA
        ]
        return pd.DataFrame(rows, columns=ENTROPY_COLUMNS)

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for n in self.sample_sizes:
            for criterion in CRITERIA:
                c = self.counts[(n, criterion)]
                for rank, count in enumerate(c):
                    rows.append((n, criterion, rank, int(count), count / c.sum()))
        return pd.DataFrame(rows, columns=FREQUENCY_COLUMNS)


def _run_replicate(
    n_rows: int,
    n_cols: int,
    singular_values: tuple[float, ...],
    max_rank: int,
    seed: int,
    n: int,
    replicate: int,
) -> tuple[int, int]:
    rng = np.random.default_rng([seed, n, replicate])
    pi = simulate_coefficient_matrix(n_rows, n_cols, singular_values, rng)
    profile = fit_profile(simulate_data(pi, n, rng), max_rank)
    result = solve(rrr_sbic_input(profile))
    return int(result.selected("bic")), int(result.selected("sbic"))


def run_rrr_experiment(cfg: ExperimentConfig, threads: int = 1) -> SelectionFrequencies:
    """Rank-selection frequencies of BIC and sBIC in reduced-rank regression.

    Each replicate draws a fresh coefficient matrix with the configured
    singular values and a fresh data set from the stream
    ``(master_seed, n, replicate)``, fits ranks ``0..max_rank`` and records
    both maximizers. Results do not depend on ``threads``.
    """
    tasks = [(n, r) for n in cfg.sample_sizes for r in range(cfg.replicates)]
    max_rank = cfg.resolved_max_rank
    fixed = (cfg.n_rows, cfg.n_cols, tuple(cfg.true_singular_values), max_rank, cfg.master_seed)
    logger.info(
        "Running %d replicates at %d sample sizes (threads=%d)", cfg.replicates, len(cfg.sample_sizes), threads
    )
    if threads > 1:
        columns = [[value] * len(tasks) for value in fixed]
        chunksize = max(1, len(tasks) // (threads * 4))
        with ProcessPoolExecutor(max_workers=threads) as pool:
            picks = list(
                pool.map(_run_replicate, *columns, *zip(*tasks), chunksize=chunksize)
            )
    else:
        picks = [_run_replicate(*fixed, n, r) for n, r in tasks]

    selections = pd.DataFrame(
        [(n, r, b, s) for (n, r), (b, s) in zip(tasks, picks)],
        columns=["sample_size", "replicate", "bic", "sbic"],
    )
    return SelectionFrequencies.from_selections(selections, max_rank)


def entropy_path(path: Path) -> Path:
    """``results.csv`` -> ``results_entropy.csv``."""
    return path.with_name(f"{path.stem}_entropy{path.suffix or '.csv'}")


def emit_results(freqs: SelectionFrequencies, path: Union[str, Path]) -> tuple[Path, Path]:
    """Write the frequency table to ``path`` and the entropy summary next to it.

    Returns:
        The two paths written.

    Raises:
        OutputError: If either file cannot be written.
    """
    path = Path(path)
    summary = entropy_path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        freqs.to_frame().to_csv(path, index=False, float_format=FLOAT_FORMAT)
        freqs.entropy_table().to_csv(summary, index=False, float_format=FLOAT_FORMAT)
    except OSError as e:
        raise OutputError(f"Could not write results to {path}: {e}", path=str(path)) from e
    logger.info("Wrote %s and %s", path, summary)
    return path, summary


def read_frequencies(path: Union[str, Path]) -> SelectionFrequencies:
    """Parse a frequency table written by :func:`emit_results`.

    Raises:
        SchemaError: If the file is unreadable or has the wrong columns or values.
    """
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise SchemaError(f"Could not read {path}: {e}", field=str(path)) from e
    if list(frame.columns) != FREQUENCY_COLUMNS:
        raise SchemaError(
            f"Expected columns {','.join(FREQUENCY_COLUMNS)}, got {','.join(map(str, frame.columns))}",
            field="columns",
        )
    unknown = set(frame["criterion"]) - set(CRITERIA)
    if unknown:
        raise SchemaError(f"Unknown criteria: {sorted(unknown)}", field="criterion")
    if frame.empty or (frame["rank"] < 0).any() or (frame["count"] < 0).any():
        raise SchemaError(f"Ranks and counts in {path} must be nonnegative", field="rank")

    max_rank = int(frame["rank"].max())
    counts: dict[tuple[int, str], np.ndarray] = {}
    for (n, criterion), group in frame.groupby(["sample_size", "criterion"], sort=True):
        c = np.zeros(max_rank + 1, dtype=int)
        c[group["rank"].to_numpy(dtype=int)] = group["count"].to_numpy(dtype=int)
        counts[(int(n), str(criterion))] = c
    return SelectionFrequencies(counts=counts)


def run_factor_subsample_study(
    data: np.ndarray,
    sample_sizes: Sequence[int] = (25, 50, 75, 100),
    datasets: int = 10,
    seed: int = 0,
    restarts: int = 50,
    max_factors: int = 3,
    threads: int = 1,
) -> pd.DataFrame:
    """Factor-count posteriors on random subsamples of raw observations.

    For every sample size, ``datasets`` subsamples are drawn without
    replacement from the rows of ``data`` (stream ``(seed, n, d)``); each
    is fitted for ``0..max_factors`` factors and solved under both criteria.

    Returns:
        One row per ``(sample_size, dataset, criterion, factors)`` with the
        posterior probability, plus the log Bayes factor of three against
        two factors for that subsample (NaN when ``max_factors < 3``).

    Raises:
        SampleSizeError: If a sample size does not exceed the number of variables.
        ValidationError: If a sample size exceeds the number of observations.
    """
    x = np.asarray(data, dtype=float)
    if x.ndim != 2:
        raise ValidationError(f"Observations must be a matrix, got shape {x.shape}")
    n_obs, k = x.shape
    if datasets < 1:
        raise ValidationError(f"datasets must be at least 1, got {datasets}")
    for n in sample_sizes:
        if n <= k:
            raise SampleSizeError(f"Subsamples need more than {k} observations, got {n}")
        if n > n_obs:
            raise ValidationError(f"Cannot draw {n} of {n_obs} observations without replacement")

    rows = []
    for n in sample_sizes:
        for d in range(datasets):
            rng = np.random.default_rng([seed, n, d])
            subsample = x[rng.choice(n_obs, size=n, replace=False)]
            profile = fa_fit_profile(
                sample_covariance(subsample), n, max_factors, seed=seed, restarts=restarts, threads=threads
            )
            result = solve(fa_sbic_input(profile))
            for criterion in CRITERIA:
                log_bf = result.log_bayes_factor("3", "2", criterion) if max_factors >= 3 else float("nan")
                for label, p in result.posterior(criterion).items():
                    rows.append((n, d, criterion, int(label), p, log_bf))
            logger.info("Subsample n=%d dataset=%d: sBIC picks %s factors", n, d, result.selected("sbic"))
    return pd.DataFrame(
        rows,
        columns=["sample_size", "dataset", "criterion", "factors", "posterior", "log_bayes_factor_3_2"],
    )
