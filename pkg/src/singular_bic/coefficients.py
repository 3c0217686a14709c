"""Learning coefficients (real log-canonical thresholds) and their multiplicities.

A learning coefficient ``lam`` is the exact rational exponent of ``n`` in the
marginal-likelihood asymptotics; ``multiplicity`` is the exponent ``m`` of the
accompanying ``(log n)^(m-1)`` factor. Values are kept as
:class:`fractions.Fraction` and only become floats inside the solver.
"""

from __future__ import annotations

from collections.abc import Callable, Iterator, Mapping
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

from singular_bic.errors import RangeError, RankRangeError, ValidationError
from singular_bic.poset import ModelId, ModelPoset

RationalLike = Union[Fraction, int, str]


def parse_rational(value: RationalLike) -> Fraction:
    """Parse ``"p/q"``, ``"p"`` or an int into a normalized Fraction.

    Raises:
        ValidationError: If the value is not an exact rational.
    """
    if isinstance(value, bool) or isinstance(value, float):
        raise ValidationError(f"Expected an exact rational, got {value!r}")
    try:
        return Fraction(value)
    except (ValueError, ZeroDivisionError, TypeError) as e:
        raise ValidationError(f"Invalid rational {value!r}: {e}") from e


def format_rational(value: Fraction) -> str:
    """Serialize as ``"p/q"``, or ``"p"`` when the denominator is one."""
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class LearningCoefficient:
    """Exact learning coefficient with its multiplicity."""

    lam: Fraction
    multiplicity: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "lam", parse_rational(self.lam))
        if self.lam < 0:
            raise ValidationError(f"Learning coefficient must be >= 0, got {self}")
        if isinstance(self.multiplicity, bool) or int(self.multiplicity) != self.multiplicity:
            raise ValidationError(f"Multiplicity must be an integer, got {self.multiplicity!r}")
        if self.multiplicity < 1:
            raise ValidationError(f"Multiplicity must be >= 1, got {self.multiplicity}")

    def __str__(self) -> str:
        return f"{format_rational(self.lam)} (m={self.multiplicity})"


def bayes_complexity(coef: LearningCoefficient) -> tuple[Fraction, int]:
    """Lexicographic sort key ``(-lam, m)``.

    A smaller key means a faster-decaying ``n^-lam (log n)^(m-1)`` factor,
    i.e. a larger Bayes complexity.
    """
    return (-coef.lam, coef.multiplicity)


def compare_bayes_complexity(a: LearningCoefficient, b: LearningCoefficient) -> int:
    """Return -1, 0 or 1 as ``bayes_complexity(a)`` is below, equal to or above ``b``'s."""
    ka, kb = bayes_complexity(a), bayes_complexity(b)
    return (ka > kb) - (ka < kb)


@dataclass(frozen=True)
class CoefficientMatrix:
    """Map ``(i, j) -> LearningCoefficient`` for submodels ``j`` of ``i``."""

    entries: Mapping[tuple[ModelId, ModelId], LearningCoefficient] = field(default_factory=dict)

    def __getitem__(self, key: tuple[ModelId, ModelId]) -> LearningCoefficient:
        return self.entries[key]

    def __contains__(self, key: object) -> bool:
        return key in self.entries

    def __iter__(self) -> Iterator[tuple[ModelId, ModelId]]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def items(self) -> Iterator[tuple[tuple[ModelId, ModelId], LearningCoefficient]]:
        return iter(self.entries.items())

    @classmethod
    def from_function(
        cls,
        poset: ModelPoset,
        fn: Callable[[int, int], LearningCoefficient],
    ) -> CoefficientMatrix:
        """Tabulate ``fn(i, j)`` over internal indices for every ``j <= i``."""
        entries = {}
        for i in range(len(poset)):
            for j in poset.down_indices(i):
                entries[(poset.ids[i], poset.ids[int(j)])] = fn(i, int(j))
        return cls(entries=entries)


# Reduced-rank regression


def _check_ranks(n_rows: int, n_cols: int, i: int, j: int = 0) -> None:
    if n_rows < 1 or n_cols < 1:
        raise RankRangeError(f"Matrix dimensions must be positive, got {n_rows}x{n_cols}")
    if not 0 <= j <= i <= min(n_rows, n_cols):
        raise RankRangeError(
            f"Ranks must satisfy 0 <= j <= i <= min(N, M) = {min(n_rows, n_cols)}, got i={i}, j={j}",
            details={"i": i, "j": j, "N": n_rows, "M": n_cols},
        )


def rrr_learning_coefficient(n_rows: int, n_cols: int, i: int, j: int) -> LearningCoefficient:
    """Learning coefficient of the rank-``i`` model at a rank-``j`` truth.

    Args:
        n_rows: Number of responses N.
        n_cols: Number of covariates M.
        i: Rank bound H of the fitted model.
        j: Rank r of the data-generating matrix.

    Returns:
        Exact coefficient; the multiplicity is 2 only in the odd interior case.

    Raises:
        RankRangeError: Unless ``0 <= j <= i <= min(N, M)``.
    """
    _check_ranks(n_rows, n_cols, i, j)
    N, M, H, r = n_rows, n_cols, i, j
    if M + H <= N + r:
        return LearningCoefficient(Fraction(H * M + r * (N - H), 2), 1)
    if N + H <= M + r:
        return LearningCoefficient(Fraction(H * N + r * (M - H), 2), 1)
    core = 2 * (H + r) * (M + N) - (M - N) ** 2 - (H + r) ** 2
    if (M + N + H + r) % 2 == 0:
        return LearningCoefficient(Fraction(core, 8), 1)
    return LearningCoefficient(Fraction(core + 1, 8), 2)


def rrr_model_dimension(n_rows: int, n_cols: int, i: int) -> int:
    """Dimension ``i(N + M - i)`` of the rank-``i`` matrix variety."""
    _check_ranks(n_rows, n_cols, i)
    return i * (n_rows + n_cols - i)


# Factor analysis, 6 observed variables, means excluded

_FA_TABLE: dict[int, tuple[Fraction, ...]] = {
    0: (Fraction(3),),
    1: (Fraction(9, 2), Fraction(6)),
    2: (Fraction(6), Fraction(29, 4), Fraction(17, 2)),
    3: (Fraction(15, 2), Fraction(17, 2), Fraction(19, 2), Fraction(21, 2)),
}
FA_TABLE_VARIABLES = 6
FA_TABLE_MAX_FACTORS = 3


def fa_learning_coefficient(i: int, j: int) -> LearningCoefficient:
    """Tabulated coefficient of the ``i``-factor model at a ``j``-factor truth.

    Only six observed variables and at most three factors are covered.

    Raises:
        RangeError: Outside ``0 <= j <= i <= 3``.
    """
    if not 0 <= j <= i <= FA_TABLE_MAX_FACTORS:
        raise RangeError(
            f"Factor-analysis table covers 0 <= j <= i <= {FA_TABLE_MAX_FACTORS}, got i={i}, j={j}"
        )
    return LearningCoefficient(_FA_TABLE[i][j], 1)


def fa_model_dimension(k: int, i: int) -> int:
    """Free parameters of the ``i``-factor model on ``k`` variables, means excluded."""
    if k < 1 or i < 0 or i * (i - 1) // 2 > k * (i + 1):
        raise RangeError(f"No factor model with k={k} variables and i={i} factors")
    return k * (i + 1) - i * (i - 1) // 2


# Univariate Gaussian mixtures


def mixture_lambda_bound(i: int, j: int) -> LearningCoefficient:
    """Upper bound on the coefficient of an ``i``-component mixture at a ``j``-component truth.

    Used as a plug-in value; capped at ``dim/2 = (3i - 1)/2``.
    """
    if not 1 <= j <= i:
        raise RangeError(f"Mixture bound needs 1 <= j <= i, got i={i}, j={j}")
    return LearningCoefficient(min(Fraction(i - 1 + 2 * j, 2), Fraction(3 * i - 1, 2)), 1)


def mixture_model_dimension(i: int) -> int:
    """Dimension ``3i - 1`` of the unequal-variance mixture with ``i`` components."""
    if i < 1:
        raise RangeError(f"Mixtures need at least one component, got {i}")
    return 3 * i - 1


@dataclass
class ValidationReport:
    """Outcome of :func:`validate_matrix`."""

    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def raise_for_errors(self) -> None:
        """Raise ``ValidationError`` listing every error, if any."""
        if self.errors:
            raise ValidationError(
                self.errors[0]
                if len(self.errors) == 1
                else f"{self.errors[0]} (and {len(self.errors) - 1} more)",
                details={"errors": list(self.errors)},
                field="coefficients",
            )


def validate_matrix(
    poset: ModelPoset,
    matrix: CoefficientMatrix,
    dims: Mapping[ModelId, int],
) -> ValidationReport:
    """Check a coefficient matrix against a poset and model dimensions.

    Errors: missing or extra ``(i, j)`` entries, ``lam`` outside ``[0, d_i/2]``,
    multiplicity outside ``{1, ..., max(1, d_i)}``, missing dimensions.
    Warnings: a row whose diagonal is not its maximum, or ``lam`` decreasing
    along a chain ``j <= l <= i``.
    """
    report = ValidationReport()
    expected = set(poset.pairs())

    for i, j in sorted(expected - set(matrix), key=lambda p: (poset.index(p[0]), poset.index(p[1]))):
        report.errors.append(f"Missing coefficient for pair (i={i}, j={j})")
    for i, j in sorted(set(matrix) - expected):
        report.errors.append(f"Unexpected coefficient for pair (i={i}, j={j}): j is not a submodel of i")

    for label in poset.ids:
        if label not in dims:
            report.errors.append(f"Missing dimension for model {label}")
            continue
        if dims[label] < 0:
            report.errors.append(f"Negative dimension {dims[label]} for model {label}")

    for (i, j), coef in matrix.items():
        if (i, j) not in expected or i not in dims:
            continue
        d = dims[i]
        if coef.lam > Fraction(d, 2):
            report.errors.append(
                f"Coefficient lambda_({i},{j}) = {format_rational(coef.lam)} exceeds d_{i}/2 = {format_rational(Fraction(d, 2))}"
            )
        if coef.multiplicity > max(1, d):
            report.errors.append(
                f"Multiplicity m_({i},{j}) = {coef.multiplicity} exceeds d_{i} = {d}"
            )

    for k, i in enumerate(poset.ids):
        if (i, i) not in matrix:
            continue
        down = [poset.ids[int(j)] for j in poset.down_indices(k)]
        diagonal = matrix[(i, i)].lam
        for j in down:
            if (i, j) in matrix and matrix[(i, j)].lam > diagonal:
                report.warnings.append(
                    f"lambda_({i},{j}) exceeds the diagonal lambda_({i},{i})"
                )
        for j in down:
            for mid in down:
                if j == mid or not poset.is_leq(j, mid):
                    continue
                if (i, j) in matrix and (i, mid) in matrix and matrix[(i, j)].lam > matrix[(i, mid)].lam:
                    report.warnings.append(
                        f"lambda_({i},{j}) > lambda_({i},{mid}) although {j} <= {mid}"
                    )
    return report
