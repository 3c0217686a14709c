"""Tests for poset module."""

import numpy as np
import pytest

from singular_bic.errors import CycleError, UnknownIdError, ValidationError
from singular_bic.poset import build_poset, chain_poset, down_set, linear_extension
from tests.conftest import diamond, stacked_diamonds


def test_singleton_is_reflexive() -> None:
    """Test that a single model is below itself."""
    poset = build_poset(["0"], [])
    assert poset.is_leq("0", "0")
    assert poset.pairs() == [("0", "0")]
    assert poset.minimal() == ["0"]


def test_chain_transitive_closure() -> None:
    """Test the transitive closure of a chain."""
    poset = build_poset(["0", "1", "2"], [("0", "1"), ("1", "2")])
    assert poset.is_leq("0", "2")
    assert not poset.is_leq("2", "0")


def test_two_cycle_rejected() -> None:
    """Test that a two-cycle is rejected."""
    with pytest.raises(CycleError) as exc_info:
        build_poset(["0", "1"], [("0", "1"), ("1", "0")])
    assert set(exc_info.value.cycle) == {"0", "1"}


def test_long_cycle_rejected() -> None:
    """Test that a longer cycle is rejected."""
    with pytest.raises(CycleError):
        build_poset(["a", "b", "c"], [("a", "b"), ("b", "c"), ("c", "a")])


def test_unknown_cover_id() -> None:
    """Test that covers must name known models."""
    with pytest.raises(UnknownIdError) as exc_info:
        build_poset(["0", "1"], [("0", "7")])
    assert exc_info.value.model_id == "7"


def test_empty_and_duplicate_ids() -> None:
    """Test empty and duplicate model ids."""
    with pytest.raises(ValidationError):
        build_poset([], [])
    with pytest.raises(ValidationError):
        build_poset(["a", "a"], [])


def test_down_set_chain() -> None:
    """Test down sets on a chain."""
    poset = chain_poset(["0", "1", "2"])
    assert down_set(poset, "2") == ["0", "1", "2"]
    assert down_set(poset, "0") == ["0"]


def test_down_set_diamond() -> None:
    """Test down sets on a diamond."""
    assert down_set(diamond(), "3") == ["0", "1", "2", "3"]
    assert down_set(diamond(), "1") == ["0", "1"]


def test_down_set_unknown_id() -> None:
    """Test down sets of an unknown model."""
    with pytest.raises(UnknownIdError):
        down_set(diamond(), "9")


def test_index_accepts_labels_and_positions() -> None:
    """Test lookup by label and by position."""
    poset = chain_poset(["low", "high"])
    assert poset.index("high") == 1
    assert poset.index(1) == 1
    with pytest.raises(UnknownIdError):
        poset.index(2)


def test_linear_extension_examples() -> None:
    """Test linear extensions of small posets."""
    assert linear_extension(chain_poset(["0", "1", "2"])) == ["0", "1", "2"]
    assert linear_extension(build_poset(["0", "1"], [])) == ["0", "1"]
    assert linear_extension(diamond()) == ["0", "1", "2", "3"]


def test_linear_extension_ignores_label_order() -> None:
    """Test that linear extensions follow the order, not the labels."""
    poset = build_poset(["big", "small"], [("small", "big")])
    assert linear_extension(poset) == ["small", "big"]


def test_order_properties_on_stacked_diamonds() -> None:
    """Test order properties on stacked diamonds."""
    poset = stacked_diamonds(3)
    order = linear_extension(poset)
    position = {label: k for k, label in enumerate(order)}
    for i in poset.ids:
        assert i in down_set(poset, i)
        for j in poset.ids:
            if i != j and poset.is_leq(j, i):
                assert position[j] < position[i]
                assert not poset.is_leq(i, j)
    assert poset.is_leq("0", str(len(poset) - 1))


def test_leq_is_read_only() -> None:
    """Test that the order matrix is read-only."""
    poset = diamond()
    with pytest.raises(ValueError):
        poset.leq[0, 3] = False
    assert np.array_equal(np.diag(poset.leq), np.ones(4, dtype=bool))
