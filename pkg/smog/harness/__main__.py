import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from smog.exceptions import ArgumentError, ConfigError, NumericalError
from smog.model import time_ratios, timing_probe
from smog.serialization.utils import _format_json

from .config import ExperimentConfig
from .loop import run_bo_loop
from .models import build_model, default_registry, prepare_meta_models, sample_meta_datasets
from .output import emit_csv, emit_front, emit_plot, read_csv
from .suite import (
    ABLATION_PARAMETERS,
    SuiteResult,
    aggregate,
    best_hypervolume,
    final_front,
    median_run,
    repetition_seed,
    result_rows,
    run_ablation,
    run_suite,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


def _load_config(args) -> ExperimentConfig:
    if args.config:
        config = ExperimentConfig.from_file(args.config)
    elif args.benchmark:
        config = ExperimentConfig(args.benchmark)
    else:
        raise ConfigError("Pass --config <file> or --benchmark <id>")
    return config.replace(
        benchmark=args.benchmark if args.config else None,
        output_dir=args.output_dir,
        meta_cache_dir=args.meta_cache,
        seed=args.seed,
        iterations=args.iterations,
        repetitions=args.repetitions,
        models=args.model or None,
        threads=args.threads,
    )


def _output_dir(config: ExperimentConfig) -> Path:
    path = Path(config.output_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_suite(result: SuiteResult, out: Path, suffix: str = "") -> None:
    emit_csv(result.rows, out / f"results{suffix}.csv")
    emit_plot(result.table, out / f"gap{suffix}.svg", title=result.config.make_benchmark().id)
    for model in result.config.models:
        runs = [r for r in result.records if r.model == model]
        emit_front(final_front(median_run(runs)), out / f"front_{model}{suffix}.csv")
    summary: Dict[str, Any] = {
        "config": result.config.to_dict(),
        "best_hv": result.best_hv,
        "fallbacks": result.fallbacks,
    }
    (out / f"summary{suffix}.json").write_text(_format_json(summary) + "\n", encoding="utf-8")


def fit_meta(args) -> int:
    config = _load_config(args)
    if config.meta_cache_dir is None:
        raise ConfigError("fit-meta needs --meta-cache or 'meta_cache_dir' in the config")
    benchmark = config.make_benchmark()
    datasets = sample_meta_datasets(config, benchmark)
    modes = []
    for model_id in config.models:
        mode = default_registry.get(model_id).meta_task_mode
        if mode is not None and mode not in modes:
            modes.append(mode)
    if not modes:
        raise ConfigError(f"None of {list(config.models)} uses meta-task models")
    for mode in modes:
        models = prepare_meta_models(config, benchmark, mode, datasets)
        print(f"{len(models)} meta-task models ({mode}) in {config.meta_cache_dir}")
    return EXIT_OK


def run(args) -> int:
    config = _load_config(args)
    model_id = config.models[0]
    benchmark = config.make_benchmark()
    entry = default_registry.get(model_id)
    meta = None
    if entry.meta_task_mode is not None:
        meta = prepare_meta_models(config, benchmark, entry.meta_task_mode)
    surrogate = build_model(model_id, None, config, meta_models=meta)
    seed = repetition_seed(config, 0)
    record = run_bo_loop(config, surrogate, benchmark, seed, model_id)
    out = _output_dir(config)
    emit_csv(result_rows([record], best_hypervolume([record])), out / f"run_{model_id}.csv")
    emit_front(final_front(record), out / f"front_{model_id}.csv")
    print(f"{model_id} on {benchmark.id}: final hypervolume {record.rows[-1].hv:.6g}")
    return EXIT_OK


def suite(args) -> int:
    config = _load_config(args)
    result = run_suite(config)
    _write_suite(result, _output_dir(config))
    print(f"Suite on {config.benchmark}: best hypervolume {result.best_hv:.6g}")
    return EXIT_OK


def plot(args) -> int:
    rows = read_csv(args.csv)
    if args.model:
        rows = [r for r in rows if r.model in args.model]
    emit_plot(aggregate(rows), args.out, title=args.title)
    return EXIT_OK


def ablation(args) -> int:
    config = _load_config(args)
    out = _output_dir(config)
    for value, result in run_ablation(config, args.parameter, args.values):
        _write_suite(result, out, suffix=f"_{args.parameter}-{value}")
    return EXIT_OK


def timing(args) -> int:
    rows = timing_probe(
        args.meta_counts,
        meta_observations=args.meta_observations,
        target_observations=args.target_observations,
        objective_count=args.objectives,
        repeats=args.repeats,
        seed=args.seed or 0,
    )
    print(_format_json({"rows": rows, "ratios": time_ratios(rows)}))
    return EXIT_OK


def _add_config_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", "-c", type=str, help="JSON experiment configuration")
    parser.add_argument("--benchmark", "-b", type=str, help="Benchmark id, e.g. hartmann6:M=8,O=2")
    parser.add_argument("--output-dir", type=str, help="Directory for CSV and SVG artifacts")
    parser.add_argument("--meta-cache", type=str, help="Directory of cached meta-task models")
    parser.add_argument("--seed", type=int, help="Root seed")
    parser.add_argument("--iterations", type=int, help="BO iterations after the initial point")
    parser.add_argument("--repetitions", type=int, help="Repetitions per model")
    parser.add_argument("--threads", type=int, help="Worker threads (0 = one per CPU)")
    parser.add_argument(
        "--model", "-m", action="append", help="Model id; repeat for several models"
    )


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="python -m smog",
        description="Meta-learned multi-objective Bayesian optimization experiments",
    )
    parser.add_argument(
        "--verbose", "-v", action="count", default=0, help="-v for INFO, -vv for DEBUG"
    )
    subparsers = parser.add_subparsers(dest="command")

    parser_fit = subparsers.add_parser(
        "fit-meta", description="Fit the meta-task models of a benchmark and cache them."
    )
    _add_config_options(parser_fit)
    parser_fit.set_defaults(func=fit_meta)

    parser_run = subparsers.add_parser(
        "run", description="Run one campaign of the first configured model."
    )
    _add_config_options(parser_run)
    parser_run.set_defaults(func=run)

    parser_suite = subparsers.add_parser(
        "suite",
        description="Run every configured model for every repetition and write "
        "results.csv, gap.svg, one front_<model>.csv per model and summary.json.",
    )
    _add_config_options(parser_suite)
    parser_suite.set_defaults(func=suite)

    parser_plot = subparsers.add_parser("plot", description="Plot a result CSV as an SVG.")
    parser_plot.add_argument("csv", type=str, help="Result table written by 'suite'")
    parser_plot.add_argument("out", type=str, help="Output SVG path")
    parser_plot.add_argument("--model", "-m", action="append", help="Only plot these models")
    parser_plot.add_argument("--title", type=str)
    parser_plot.set_defaults(func=plot)

    parser_ablation = subparsers.add_parser(
        "ablation", description="Run one suite per value of a benchmark parameter."
    )
    _add_config_options(parser_ablation)
    parser_ablation.add_argument("--parameter", "-p", required=True, choices=ABLATION_PARAMETERS)
    parser_ablation.add_argument("--values", nargs="+", type=int, required=True)
    parser_ablation.set_defaults(func=ablation)

    parser_timing = subparsers.add_parser(
        "timing", description="Time prior construction and target fitting against M."
    )
    parser_timing.add_argument("--meta-counts", nargs="+", type=int, default=[2, 4, 8])
    parser_timing.add_argument("--meta-observations", type=int, default=32)
    parser_timing.add_argument("--target-observations", type=int, default=8)
    parser_timing.add_argument("--objectives", type=int, default=2)
    parser_timing.add_argument("--repeats", type=int, default=3)
    parser_timing.add_argument("--seed", type=int)
    parser_timing.set_defaults(func=timing)
    return parser


def cli_main(argv: Optional[Sequence[str]] = None) -> int:
    """Run the command line and return its exit code."""
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as ex:
        return EXIT_OK if ex.code in (0, None) else EXIT_USAGE
    if not hasattr(args, "func"):
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    levels: List[int] = [logging.WARNING, logging.INFO, logging.DEBUG]
    logging.basicConfig(
        level=levels[min(args.verbose, 2)],
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (ConfigError, ArgumentError) as ex:
        print(f"error: {ex}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as ex:
        print(f"numerical failure: {ex}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as ex:
        print(f"error: {ex}", file=sys.stderr)
        return EXIT_FAILURE


def main(argv: Optional[Sequence[str]] = None) -> None:
    sys.exit(cli_main(argv))


if __name__ == "__main__":
    main()
