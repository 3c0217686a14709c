"""Finite partially ordered sets of candidate models.

Models are identified externally by string labels and internally by their
position in ``ModelPoset.ids``. The order is held as a dense boolean matrix
``leq`` with ``leq[j, i]`` true iff model ``j`` is a submodel of model ``i``.
"""

from __future__ import annotations

import heapq
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from singular_bic.errors import CycleError, UnknownIdError, ValidationError

ModelId = str
ModelRef = Union[str, int]


@dataclass(frozen=True, eq=False)
class ModelPoset:
    """Immutable poset over model labels."""

    ids: tuple[ModelId, ...]
    leq: np.ndarray = field(repr=False)
    _index: dict[ModelId, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        self.leq.setflags(write=False)
        object.__setattr__(self, "_index", {label: k for k, label in enumerate(self.ids)})

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, model: object) -> bool:
        return model in self._index

    def index(self, model: ModelRef) -> int:
        """Internal index of a model given its label or index."""
        if isinstance(model, (int, np.integer)) and not isinstance(model, bool):
            if 0 <= int(model) < len(self.ids):
                return int(model)
            raise UnknownIdError(model)
        try:
            return self._index[model]
        except KeyError:
            raise UnknownIdError(model) from None

    def is_leq(self, j: ModelRef, i: ModelRef) -> bool:
        """Whether model ``j`` is a submodel of model ``i``."""
        return bool(self.leq[self.index(j), self.index(i)])

    def down_indices(self, i: int, strict: bool = False) -> np.ndarray:
        """Indices ``j <= i`` in ascending order."""
        mask = self.leq[:, i].copy()
        if strict:
            mask[i] = False
        return np.flatnonzero(mask)

    def pairs(self) -> list[tuple[ModelId, ModelId]]:
        """All ``(i, j)`` label pairs with ``j <= i``, row by row."""
        return [
            (self.ids[i], self.ids[j]) for i in range(len(self.ids)) for j in self.down_indices(i)
        ]

    def minimal(self) -> list[ModelId]:
        """Models without strict submodels."""
        return [self.ids[i] for i in range(len(self.ids)) if self.leq[:, i].sum() == 1]


def build_poset(ids: Sequence[ModelId], covers: Iterable[tuple[ModelId, ModelId]]) -> ModelPoset:
    """Build a poset from cover pairs.

    Args:
        ids: Model labels; their order fixes the internal indices.
        covers: ``(child, parent)`` pairs meaning child is a submodel of parent.

    Returns:
        ModelPoset whose order is the reflexive-transitive closure of ``covers``.

    Raises:
        ValidationError: If ``ids`` is empty or contains duplicates.
        UnknownIdError: If a cover references an unlisted id.
        CycleError: If the closure is not antisymmetric.
    """
    labels = tuple(str(label) for label in ids)
    if not labels:
        raise ValidationError("A poset needs at least one model", field="ids")
    if len(set(labels)) != len(labels):
        raise ValidationError("Model ids must be unique", field="ids")

    index = {label: k for k, label in enumerate(labels)}
    size = len(labels)
    leq = np.eye(size, dtype=bool)
    for child, parent in covers:
        for label in (child, parent):
            if str(label) not in index:
                raise UnknownIdError(label)
        leq[index[str(child)], index[str(parent)]] = True

    # Warshall
    for k in range(size):
        leq |= np.outer(leq[:, k], leq[k, :])

    both = leq & leq.T
    np.fill_diagonal(both, False)
    if both.any():
        j, i = (int(x) for x in np.argwhere(both)[0])
        raise CycleError(
            f"Covers imply {labels[j]} <= {labels[i]} <= {labels[j]}",
            cycle=(labels[j], labels[i]),
        )
    return ModelPoset(ids=labels, leq=leq)


def chain_poset(ids: Sequence[ModelId]) -> ModelPoset:
    """Totally ordered poset ``ids[0] <= ids[1] <= ...``."""
    return build_poset(ids, zip(ids[:-1], ids[1:]))


def down_set(poset: ModelPoset, i: ModelRef) -> list[ModelId]:
    """All submodels of ``i``, including ``i``, in ascending internal index."""
    return [poset.ids[j] for j in poset.down_indices(poset.index(i))]


def linear_extension(poset: ModelPoset) -> list[ModelId]:
    """Total order in which every model follows all of its strict submodels.

    Kahn's algorithm with a min-heap, so among available models the one
    with the smallest internal index is emitted first.
    """
    size = len(poset)
    strict = poset.leq.copy()
    np.fill_diagonal(strict, False)
    pending = strict.sum(axis=0)
    ready = [i for i in range(size) if pending[i] == 0]
    heapq.heapify(ready)
    order: list[int] = []
    while ready:
        j = heapq.heappop(ready)
        order.append(j)
        for i in np.flatnonzero(strict[j]):
            pending[i] -= 1
            if pending[i] == 0:
                heapq.heappush(ready, int(i))
    return [poset.ids[k] for k in order]
