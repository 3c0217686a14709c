"""Data ingestion for the model families and the bundled galaxies data."""

from __future__ import annotations

from importlib import resources
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd

from singular_bic.errors import DimensionError, SchemaError, ValidationError

PathLike = Union[str, Path]

GALAXIES_RESOURCE = "galaxies.txt"


def _read_numeric_table(path: PathLike) -> pd.DataFrame:
    try:
        frame = pd.read_csv(path, comment="#", skipinitialspace=True)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise SchemaError(f"Could not read {path}: {e}", field=str(path)) from e
    try:
        return frame.apply(pd.to_numeric)
    except (ValueError, TypeError) as e:
        raise SchemaError(f"Non-numeric entries in {path}: {e}", field=str(path)) from e


def load_series(path: PathLike) -> np.ndarray:
    """Read a single column of reals.

    Accepts a one-column CSV (with or without a header line) or
    whitespace-separated text; lines starting with ``#`` are ignored.
    """
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise SchemaError(f"Could not read {path}: {e}", field=str(path)) from e
    tokens = [
        token
        for line in text.splitlines()
        if not line.lstrip().startswith("#")
        for token in line.replace(",", " ").split()
    ]
    values = pd.to_numeric(pd.Series(tokens, dtype=object), errors="coerce")
    # A leading non-numeric token is a header; anything else is an error.
    start = 1 if len(values) and np.isnan(values.iloc[0]) else 0
    values = values.iloc[start:]
    bad_mask = values.isna().to_numpy()
    if bad_mask.any():
        bad = tokens[start + int(np.flatnonzero(bad_mask)[0])]
        raise SchemaError(f"Non-numeric value {bad!r} in {path}", field=str(path))
    if values.empty:
        raise ValidationError(f"No data values in {path}", field=str(path))
    return values.to_numpy(dtype=float)


def galaxies_dataset() -> np.ndarray:
    """The 82 galaxy velocities, in units of 1000 km/s, ascending."""
    text = resources.files("singular_bic").joinpath("data").joinpath(GALAXIES_RESOURCE).read_text()
    values = [float(line) for line in text.splitlines() if line.strip() and not line.startswith("#")]
    return np.sort(np.asarray(values)) / 1000.0


def load_rrr_csv(path: PathLike, y2_path: Optional[PathLike] = None) -> tuple[np.ndarray, np.ndarray]:
    """Read reduced-rank regression data; rows are observations.

    Either one file with columns prefixed ``y1_`` (responses) and ``y2_``
    (covariates), or two files holding responses and covariates.

    Returns:
        ``(y1, y2)`` as ``N x n`` and ``M x n`` arrays.
    """
    frame = _read_numeric_table(path)
    if y2_path is not None:
        covariates = _read_numeric_table(y2_path)
        if len(covariates) != len(frame):
            raise DimensionError(
                f"Response file has {len(frame)} rows but covariate file has {len(covariates)}"
            )
        y1, y2 = frame.to_numpy(dtype=float), covariates.to_numpy(dtype=float)
    else:
        y1_cols = [c for c in frame.columns if str(c).startswith("y1_")]
        y2_cols = [c for c in frame.columns if str(c).startswith("y2_")]
        if not y1_cols or not y2_cols:
            raise SchemaError(
                f"{path} needs columns prefixed y1_ and y2_, got {list(frame.columns)}",
                field="columns",
            )
        y1, y2 = frame[y1_cols].to_numpy(dtype=float), frame[y2_cols].to_numpy(dtype=float)
    if np.isnan(y1).any() or np.isnan(y2).any():
        raise ValidationError(f"Missing values in {path}")
    return y1.T.copy(), y2.T.copy()


def load_observations_csv(path: PathLike) -> np.ndarray:
    """Raw observations with a header row; rows are cases."""
    data = _read_numeric_table(path).to_numpy(dtype=float)
    if np.isnan(data).any():
        raise ValidationError(f"Missing values in {path}")
    return data


def load_covariance_csv(path: PathLike) -> np.ndarray:
    """Square covariance matrix, with or without a header row."""
    try:
        frame = pd.read_csv(path, header=None, comment="#", skipinitialspace=True)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise SchemaError(f"Could not read {path}: {e}", field=str(path)) from e
    numeric = frame.apply(pd.to_numeric, errors="coerce")
    if numeric.iloc[0].isna().all():
        numeric = numeric.iloc[1:]
    matrix = numeric.to_numpy(dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DimensionError(f"Covariance in {path} is not square: shape {matrix.shape}")
    if np.isnan(matrix).any():
        raise SchemaError(f"Non-numeric entries in covariance file {path}", field=str(path))
    return matrix
