"""Pydantic v2 models for input documents and experiment configuration."""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Any, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from pydantic import ValidationError as PydanticValidationError

from singular_bic.coefficients import (
    CoefficientMatrix,
    LearningCoefficient,
    format_rational,
    parse_rational,
)
from singular_bic.errors import SchemaError, ValidationError
from singular_bic.poset import build_poset
from singular_bic.solver import SbicInput


def _schema_error(e: PydanticValidationError, source: str) -> SchemaError:
    first = e.errors()[0]
    key = ".".join(str(part) for part in first["loc"]) or "<root>"
    return SchemaError(
        f"Invalid {source}: key '{key}': {first['msg']}",
        details={"errors": [{**err, "ctx": None} for err in e.errors()]},
        field=key,
    )


# Model collection file
class ModelEntry(BaseModel):
    """One candidate model."""

    model_config = ConfigDict(extra="forbid")

    id: str = Field(..., min_length=1, description="Model label")
    loglik: float = Field(..., description="Maximized log-likelihood (natural log)")
    dim: int = Field(..., ge=0, description="Model dimension used by BIC")
    prior: Optional[float] = Field(None, gt=0, description="Positive prior weight; omitted means uniform")


class CoefficientEntry(BaseModel):
    """Learning coefficient of model ``i`` at submodel ``j``."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    i: str = Field(..., description="Model label")
    j: str = Field(..., description="Submodel label")
    lam: str = Field(..., alias="lambda", description="Exact rational as 'p/q' or 'p'")
    m: int = Field(1, ge=1, description="Multiplicity")

    @field_validator("lam", mode="before")
    @classmethod
    def validate_lambda(cls, v: Any) -> str:
        """Only exact rationals are accepted."""
        if isinstance(v, bool) or not isinstance(v, (str, int)):
            raise ValueError("lambda must be a rational string such as '9/2'")
        try:
            value = parse_rational(v)
        except ValidationError as e:
            raise ValueError(e.message) from e
        if value < 0:
            raise ValueError("lambda must be nonnegative")
        return format_rational(value)

    @property
    def coefficient(self) -> LearningCoefficient:
        return LearningCoefficient(Fraction(self.lam), self.m)


class ModelCollectionFile(BaseModel):
    """JSON document describing a model poset and everything the solver needs."""

    model_config = ConfigDict(extra="forbid")

    models: list[ModelEntry] = Field(..., min_length=1)
    order: list[tuple[str, str]] = Field(
        default_factory=list, description="[child, parent] cover pairs"
    )
    n: int = Field(..., description="Sample size")
    coefficients: list[CoefficientEntry] = Field(default_factory=list)

    @model_validator(mode="after")
    def validate_ids(self) -> ModelCollectionFile:
        """Model ids must be unique."""
        ids = [m.id for m in self.models]
        if len(set(ids)) != len(ids):
            raise ValueError("model ids must be unique")
        return self

    @classmethod
    def from_json(cls, path: Union[str, Path]) -> ModelCollectionFile:
        """Load and validate a model collection file.

        Raises:
            SchemaError: If the file is not JSON or does not match the schema.
        """
        try:
            raw = json.loads(Path(path).read_text())
        except OSError as e:
            raise SchemaError(f"Could not read {path}: {e}", field=str(path)) from e
        except json.JSONDecodeError as e:
            raise SchemaError(f"Invalid JSON in {path}: {e}", field="<root>") from e
        try:
            return cls.model_validate(raw)
        except PydanticValidationError as e:
            raise _schema_error(e, "model collection") from e

    def to_sbic_input(self) -> SbicInput:
        """Build the solver input; semantic problems raise ``ValidationError``."""
        poset = build_poset([m.id for m in self.models], self.order)
        entries: dict[tuple[str, str], LearningCoefficient] = {}
        for entry in self.coefficients:
            key = (entry.i, entry.j)
            if key in entries:
                raise ValidationError(
                    f"Duplicate coefficient for pair (i={entry.i}, j={entry.j})", field="coefficients"
                )
            entries[key] = entry.coefficient
        has_prior = [m.prior is not None for m in self.models]
        if any(has_prior) and not all(has_prior):
            raise ValidationError("Either every model or no model must carry a prior", field="prior")
        return SbicInput(
            poset=poset,
            loglik={m.id: m.loglik for m in self.models},
            n=self.n,
            coefficients=CoefficientMatrix(entries=entries),
            dims={m.id: m.dim for m in self.models},
            prior={m.id: float(m.prior) for m in self.models if m.prior is not None} or None,
        )


# Monte Carlo experiment
DEFAULT_SAMPLE_SIZES = [100, 150, 200, 250, 300, 400, 500]


class ExperimentConfig(BaseModel):
    """Rank-selection study for reduced-rank regression."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    n_rows: int = Field(10, ge=1, alias="N", description="Response dimension N")
    n_cols: int = Field(15, ge=1, alias="M", description="Covariate dimension M")
    true_singular_values: list[float] = Field(
        default_factory=lambda: [1.25, 1.0, 0.75, 0.5],
        description="Nonzero singular values of the true coefficient matrix",
    )
    sample_sizes: list[int] = Field(default_factory=lambda: list(DEFAULT_SAMPLE_SIZES))
    replicates: int = Field(500, ge=1, description="Simulations per sample size")
    max_rank: Optional[int] = Field(None, description="Largest rank fitted; default min(N, M)")
    master_seed: int = Field(0, ge=0, lt=2**64, description="Seed keying every replicate stream")

    @field_validator("true_singular_values")
    @classmethod
    def validate_singular_values(cls, v: list[float]) -> list[float]:
        """Positive and nonincreasing."""
        if any(s <= 0 for s in v) or any(a < b for a, b in zip(v, v[1:])):
            raise ValueError("singular values must be positive and nonincreasing")
        return v

    @model_validator(mode="after")
    def validate_dimensions(self) -> ExperimentConfig:
        """Ranks and sample sizes must fit the matrix shape."""
        top = min(self.n_rows, self.n_cols)
        if len(self.true_singular_values) > top:
            raise ValueError(f"at most min(N, M) = {top} singular values allowed")
        if self.max_rank is not None and not 0 <= self.max_rank <= top:
            raise ValueError(f"max_rank must lie in [0, {top}]")
        smallest = max(3, self.n_cols)
        if not self.sample_sizes or any(n < smallest for n in self.sample_sizes):
            raise ValueError(f"sample sizes must be at least max(3, M) = {smallest}")
        return self

    @property
    def resolved_max_rank(self) -> int:
        return self.max_rank if self.max_rank is not None else min(self.n_rows, self.n_cols)

    @classmethod
    def from_json(cls, path: Union[str, Path]) -> ExperimentConfig:
        """Load a config file.

        Raises:
            SchemaError: If the file is unreadable or invalid.
        """
        try:
            raw = json.loads(Path(path).read_text())
        except OSError as e:
            raise SchemaError(f"Could not read {path}: {e}", field=str(path)) from e
        except json.JSONDecodeError as e:
            raise SchemaError(f"Invalid JSON in {path}: {e}", field="<root>") from e
        return cls.validate_document(raw)

    @classmethod
    def validate_document(cls, raw: Any) -> ExperimentConfig:
        try:
            return cls.model_validate(raw)
        except PydanticValidationError as e:
            raise _schema_error(e, "experiment config") from e
