"""Tests for datasets module."""

from pathlib import Path

import numpy as np
import pytest

from singular_bic.datasets import (
    galaxies_dataset,
    load_covariance_csv,
    load_observations_csv,
    load_rrr_csv,
    load_series,
)
from singular_bic.errors import DimensionError, SchemaError, ValidationError


def test_galaxies_dataset() -> None:
    """Bundled velocities are in 1000 km/s and sorted."""
    x = galaxies_dataset()
    assert x.shape == (82,)
    assert np.all(np.diff(x) >= 0)
    assert x.min() < 10
    assert x.max() > 30


def test_load_series_with_header_and_comments(tmp_path: Path) -> None:
    """Test reading a series with a header and comments."""
    path = tmp_path / "series.csv"
    path.write_text("# velocities\nvelocity\n9.172\n9.35\n  # skipped\n19.5\n")
    assert load_series(path).tolist() == [9.172, 9.35, 19.5]


def test_load_series_whitespace(tmp_path: Path) -> None:
    """Test reading a whitespace separated series."""
    path = tmp_path / "series.txt"
    path.write_text("1 2.5 3\n4e1\n")
    assert load_series(path).tolist() == [1.0, 2.5, 3.0, 40.0]


def test_load_series_errors(tmp_path: Path) -> None:
    """Test series files that cannot be read."""
    bad = tmp_path / "bad.txt"
    bad.write_text("x\n1\nnope\n")
    with pytest.raises(SchemaError, match="nope"):
        load_series(bad)
    empty = tmp_path / "empty.txt"
    empty.write_text("# nothing\nheader\n")
    with pytest.raises(ValidationError):
        load_series(empty)
    with pytest.raises(SchemaError):
        load_series(tmp_path / "missing.txt")


def test_load_rrr_single_file(tmp_path: Path) -> None:
    """Test reading regression data from one file."""
    path = tmp_path / "rrr.csv"
    path.write_text("y1_a,y1_b,y2_a\n1,2,3\n4,5,6\n7,8,9\n")
    y1, y2 = load_rrr_csv(path)
    assert y1.shape == (2, 3)
    assert y2.shape == (1, 3)
    assert y1[1].tolist() == [2.0, 5.0, 8.0]


def test_load_rrr_two_files(tmp_path: Path) -> None:
    """Test reading regression data from two files."""
    (tmp_path / "y1.csv").write_text("a,b\n1,2\n3,4\n")
    (tmp_path / "y2.csv").write_text("c\n5\n6\n")
    y1, y2 = load_rrr_csv(tmp_path / "y1.csv", tmp_path / "y2.csv")
    assert y1.tolist() == [[1.0, 3.0], [2.0, 4.0]]
    assert y2.tolist() == [[5.0, 6.0]]
    (tmp_path / "short.csv").write_text("c\n5\n")
    with pytest.raises(DimensionError):
        load_rrr_csv(tmp_path / "y1.csv", tmp_path / "short.csv")


def test_load_rrr_requires_prefixes(tmp_path: Path) -> None:
    """Test that regression columns need their prefixes."""
    path = tmp_path / "rrr.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(SchemaError, match="y1_"):
        load_rrr_csv(path)


def test_load_observations(tmp_path: Path) -> None:
    """Test reading observations."""
    path = tmp_path / "obs.csv"
    path.write_text("v1,v2\n1,2\n3,4\n5,\n")
    with pytest.raises(ValidationError):
        load_observations_csv(path)
    path.write_text("v1,v2\n1,2\n3,4\n")
    assert load_observations_csv(path).shape == (2, 2)


def test_load_covariance(tmp_path: Path) -> None:
    """Test reading a covariance matrix."""
    path = tmp_path / "cov.csv"
    path.write_text("a,b\n2,0.5\n0.5,1\n")
    assert load_covariance_csv(path).tolist() == [[2.0, 0.5], [0.5, 1.0]]
    path.write_text("2,0.5\n0.5,1\n")
    assert load_covariance_csv(path).shape == (2, 2)
    path.write_text("1,2,3\n4,5,6\n")
    with pytest.raises(DimensionError):
        load_covariance_csv(path)
