"""Command-line front end: ``sbic solve | rrr | mixture | factor | experiment | subsample``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import Any, Optional

import numpy as np
from pydantic import ValidationError as PydanticValidationError

from singular_bic import __version__
from singular_bic.coefficients import format_rational
from singular_bic.config import SbicConfig
from singular_bic.datasets import (
    galaxies_dataset,
    load_covariance_csv,
    load_observations_csv,
    load_rrr_csv,
    load_series,
)
from singular_bic.errors import (
    NumericalError,
    OutputError,
    SbicError,
    SchemaError,
    ValidationError,
)
from singular_bic.experiments import emit_results, run_factor_subsample_study, run_rrr_experiment
from singular_bic.families.factor import (
    default_uniqueness_floor,
    fa_fit_profile,
    fa_sbic_input,
    sample_covariance,
)
from singular_bic.families.mixture import default_variance_floor, fit_mixture_profile, mixture_sbic_input
from singular_bic.families.rrr import (
    RrrData,
    fit_profile,
    rrr_sbic_input,
    simulate_coefficient_matrix,
    simulate_data,
)
from singular_bic.solver import SbicInput, SbicResult, residual, solve
from singular_bic.types import ExperimentConfig, ModelCollectionFile

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_OUTPUT = 1
EXIT_SCHEMA = 2
EXIT_VALIDATION = 3
EXIT_NUMERICAL = 4

FLOAT_FORMAT = "%.12g"
RESIDUAL_TOLERANCE = 1e-9


def _g12(x: float) -> float:
    return float(f"{x:.12g}")


def _floats(raw: str) -> list[float]:
    try:
        return [float(part) for part in raw.split(",") if part.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {raw!r}") from e


def _ints(raw: str) -> list[int]:
    try:
        return [int(part) for part in raw.split(",") if part.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {raw!r}") from e


def resolve_seed(seed: Optional[int], config: SbicConfig, fallback: Optional[int] = None) -> int:
    """Explicit seed, else ``fallback``, else ``SBIC_SEED``, else fresh OS entropy."""
    if seed is not None:
        return seed
    if fallback is not None:
        return fallback
    if config.seed is not None:
        return config.seed
    return int(np.random.SeedSequence().entropy) % 2**63


def result_document(data: SbicInput, result: SbicResult, **extra: Any) -> dict[str, Any]:
    """JSON-ready summary with 12 significant digits and rationals as ``"p/q"``."""
    frame = result.to_frame()
    models = [
        {key: (_g12(value) if isinstance(value, float) else value) for key, value in row.items()}
        for row in frame.to_dict(orient="records")
    ]
    coefficients = [
        {"i": i, "j": j, "lambda": format_rational(coef.lam), "m": coef.multiplicity}
        for (i, j), coef in data.coefficients.items()
    ]
    return {
        "n": result.n,
        "models": models,
        "selected": {"bic": result.selected("bic"), "sbic": result.selected("sbic")},
        "coefficients": coefficients,
        **extra,
    }


def _write(text: str, output: Optional[Path]) -> None:
    if output is None:
        sys.stdout.write(text)
        return
    try:
        output.parent.mkdir(parents=True, exist_ok=True)
        output.write_text(text)
    except OSError as e:
        raise OutputError(f"Could not write {output}: {e}", path=str(output)) from e


def _emit(args: argparse.Namespace, data: SbicInput, result: SbicResult, **extra: Any) -> None:
    if args.format == "csv":
        _write(result.to_frame().to_csv(index=False, float_format=FLOAT_FORMAT), args.output)
        print(
            f"selected: bic={result.selected('bic')} sbic={result.selected('sbic')}", file=sys.stderr
        )
    else:
        _write(json.dumps(result_document(data, result, **extra), indent=2) + "\n", args.output)


def _solve_and_emit(args: argparse.Namespace, data: SbicInput, **extra: Any) -> int:
    result = solve(data)
    worst = residual(data, result)
    logger.info("Relative residual %.3g", worst)
    if not worst <= RESIDUAL_TOLERANCE:
        raise NumericalError(
            f"Relative residual {worst:.3g} exceeds {RESIDUAL_TOLERANCE:g}",
            details={"residual": worst},
        )
    _emit(args, data, result, **extra)
    return EXIT_OK


# Commands
def cmd_solve(args: argparse.Namespace, config: SbicConfig) -> int:
    data = ModelCollectionFile.from_json(args.input).to_sbic_input()
    return _solve_and_emit(args, data)


def cmd_rrr(args: argparse.Namespace, config: SbicConfig) -> int:
    if args.simulate:
        rng = np.random.default_rng([args.seed, args.n, 0])
        pi = simulate_coefficient_matrix(args.rows, args.cols, args.singular_values, rng)
        data = simulate_data(pi, args.n, rng)
    else:
        y1, y2 = load_rrr_csv(args.data, args.y2)
        data = RrrData(y1=y1, y2=y2)
    profile = fit_profile(data, args.max_rank)
    return _solve_and_emit(args, rrr_sbic_input(profile, prior=args.prior_weights), seed=args.seed)


def cmd_mixture(args: argparse.Namespace, config: SbicConfig) -> int:
    x = galaxies_dataset() if args.galaxies else load_series(args.data)
    floor = args.floor if args.floor is not None else default_variance_floor(x, config.variance_floor_scale)
    profile = fit_mixture_profile(
        x,
        args.max_components,
        restarts=args.restarts or config.mixture_restarts,
        floor=floor,
        seed=args.seed,
        threads=args.threads or config.threads,
        tol=config.em_tolerance,
        max_iter=config.em_max_iterations,
    )
    fits = [
        {
            "components": fit.n_components,
            "weights": [_g12(v) for v in fit.weights],
            "means": [_g12(v) for v in fit.means],
            "variances": [_g12(v) for v in fit.variances],
            "collapsed": fit.collapsed,
        }
        for fit in profile.fits
    ]
    data = mixture_sbic_input(profile, prior=args.prior_weights)
    return _solve_and_emit(args, data, seed=args.seed, variance_floor=_g12(floor), fits=fits)


def cmd_factor(args: argparse.Namespace, config: SbicConfig) -> int:
    if args.cov is not None:
        if args.n is None:
            raise ValidationError("--cov requires --n", field="n")
        s, n = load_covariance_csv(args.cov), args.n
    else:
        observations = load_observations_csv(args.data)
        s, n = sample_covariance(observations), observations.shape[0]
    profile = fa_fit_profile(
        s,
        n,
        args.max_factors,
        seed=args.seed,
        restarts=args.restarts or config.factor_restarts,
        floor=default_uniqueness_floor(s, config.uniqueness_floor_scale),
        threads=args.threads or config.threads,
        tol=config.em_tolerance,
        max_iter=config.em_max_iterations,
    )
    fits = [
        {"factors": fit.n_factors, "uniquenesses": [_g12(v) for v in fit.uniquenesses]}
        for fit in profile.fits
    ]
    return _solve_and_emit(args, fa_sbic_input(profile, prior=args.prior_weights), seed=args.seed, fits=fits)


def _experiment_config(args: argparse.Namespace) -> ExperimentConfig:
    raw: dict[str, Any] = {}
    if args.experiment_file is not None:
        raw = args.experiment_file.model_dump(exclude_unset=True)
    overrides = {
        "n_rows": args.rows,
        "n_cols": args.cols,
        "true_singular_values": args.singular_values,
        "sample_sizes": args.sample_sizes,
        "replicates": args.replicates,
        "max_rank": args.max_rank,
    }
    raw.update({key: value for key, value in overrides.items() if value is not None})
    raw["master_seed"] = args.seed
    return ExperimentConfig.validate_document(raw)


def cmd_experiment(args: argparse.Namespace, config: SbicConfig) -> int:
    cfg = _experiment_config(args)
    freqs = run_rrr_experiment(cfg, threads=args.threads or config.threads)
    for n in freqs.sample_sizes:
        logger.info(
            "n=%d: modal rank bic=%d sbic=%d", n, freqs.modal_rank(n, "bic"), freqs.modal_rank(n, "sbic")
        )
    emit_results(freqs, args.output)
    return EXIT_OK


def cmd_subsample(args: argparse.Namespace, config: SbicConfig) -> int:
    observations = load_observations_csv(args.data)
    frame = run_factor_subsample_study(
        observations,
        sample_sizes=args.sample_sizes,
        datasets=args.datasets,
        seed=args.seed,
        restarts=args.restarts or config.factor_restarts,
        max_factors=args.max_factors,
        threads=args.threads or config.threads,
    )
    _write(frame.to_csv(index=False, float_format=FLOAT_FORMAT), args.output)
    return EXIT_OK


# Parser
def _add_common(parser: argparse.ArgumentParser, output_format: bool = True) -> None:
    parser.add_argument("--seed", type=int, default=None, help="Master seed (default: SBIC_SEED or random)")
    parser.add_argument("--threads", type=int, default=None, help="Worker processes (default: SBIC_THREADS)")
    parser.add_argument("-o", "--output", type=Path, default=None, help="Output file (default: stdout)")
    if output_format:
        parser.add_argument("--format", choices=("json", "csv"), default="json")


def _add_prior(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--prior-weights",
        type=_floats,
        default=None,
        help="Comma-separated positive prior weights, one per model in chain order",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sbic", description="Singular Bayesian information criterion for nested model families."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG logging"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="Solve a model collection file")
    p.add_argument("input", type=Path, help="Model collection JSON file")
    _add_common(p)
    p.set_defaults(handler=cmd_solve)

    p = sub.add_parser("rrr", help="Rank selection in reduced-rank regression")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--data", type=Path, help="CSV with y1_/y2_ columns, or responses only with --y2")
    source.add_argument("--simulate", action="store_true", help="Simulate data instead of reading it")
    p.add_argument("--y2", type=Path, default=None, help="Covariate CSV when --data holds responses only")
    p.add_argument("--rows", type=int, default=10, help="Responses N for --simulate")
    p.add_argument("--cols", type=int, default=15, help="Covariates M for --simulate")
    p.add_argument("--singular-values", type=_floats, default=[1.25, 1.0, 0.75, 0.5])
    p.add_argument("--n", type=int, default=500, help="Sample size for --simulate")
    p.add_argument("--max-rank", type=int, default=None)
    _add_prior(p)
    _add_common(p)
    p.set_defaults(handler=cmd_rrr)

    p = sub.add_parser("mixture", help="Component count of a univariate Gaussian mixture")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--data", type=Path, help="Single column of reals")
    source.add_argument("--galaxies", action="store_true", help="Use the bundled galaxies data")
    p.add_argument("--max-components", type=int, default=10)
    p.add_argument("--restarts", type=int, default=None, help="Default: SBIC_MIXTURE_RESTARTS")
    p.add_argument("--floor", type=float, default=None, help="Absolute variance floor")
    _add_prior(p)
    _add_common(p)
    p.set_defaults(handler=cmd_mixture)

    p = sub.add_parser("factor", help="Number of factors in factor analysis")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--data", type=Path, help="CSV of raw observations, one column per variable")
    source.add_argument("--cov", type=Path, help="Sample covariance CSV (needs --n)")
    p.add_argument("--n", type=int, default=None, help="Sample size behind --cov")
    p.add_argument("--max-factors", type=int, choices=range(4), default=3)
    p.add_argument("--restarts", type=int, default=None, help="Default: SBIC_FACTOR_RESTARTS")
    _add_prior(p)
    _add_common(p)
    p.set_defaults(handler=cmd_factor)

    p = sub.add_parser("experiment", help="Monte Carlo rank-selection study")
    p.add_argument("--config", type=Path, default=None, help="Experiment JSON; flags override it")
    p.add_argument("--rows", type=int, default=None)
    p.add_argument("--cols", type=int, default=None)
    p.add_argument("--singular-values", type=_floats, default=None)
    p.add_argument("--sample-sizes", type=_ints, default=None)
    p.add_argument("--replicates", type=int, default=None)
    p.add_argument("--max-rank", type=int, default=None)
    _add_common(p, output_format=False)
    p.set_defaults(handler=cmd_experiment)

    p = sub.add_parser("subsample", help="Factor-count posteriors over random subsamples")
    p.add_argument("--data", type=Path, required=True, help="CSV of raw observations")
    p.add_argument("--sample-sizes", type=_ints, default=[25, 50, 75, 100])
    p.add_argument("--datasets", type=int, default=10)
    p.add_argument("--max-factors", type=int, choices=range(4), default=3)
    p.add_argument("--restarts", type=int, default=None)
    _add_common(p, output_format=False)
    p.set_defaults(handler=cmd_subsample)
    return parser


_EXIT_CODES: tuple[tuple[type[SbicError], int], ...] = (
    (SchemaError, EXIT_SCHEMA),
    (ValidationError, EXIT_VALIDATION),
    (NumericalError, EXIT_NUMERICAL),
    (OutputError, EXIT_OUTPUT),
)


def exit_code(error: SbicError) -> int:
    for kind, code in _EXIT_CODES:
        if isinstance(error, kind):
            return code
    return EXIT_OUTPUT


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = SbicConfig.from_env()
    except (PydanticValidationError, ValueError) as e:
        print(f"error: invalid SBIC_* environment: {e}", file=sys.stderr)
        return EXIT_SCHEMA

    level = config.logging_level
    if args.verbose:
        level = logging.DEBUG if args.verbose > 1 else min(level, logging.INFO)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")

    handler: Callable[[argparse.Namespace, SbicConfig], int] = args.handler
    try:
        file_seed = None
        if args.command == "experiment":
            args.output = args.output or Path("rrr_frequencies.csv")
            args.experiment_file = None if args.config is None else ExperimentConfig.from_json(args.config)
            if args.experiment_file is not None and "master_seed" in args.experiment_file.model_fields_set:
                file_seed = args.experiment_file.master_seed
        args.seed = resolve_seed(args.seed, config, file_seed)
        print(f"seed: {args.seed}", file=sys.stderr)
        return handler(args, config)
    except SbicError as e:
        print(f"error: {e.message}", file=sys.stderr)
        logger.debug("Details: %s", e.details)
        return exit_code(e)


if __name__ == "__main__":
    sys.exit(main())
