#!/usr/bin/env python

if __name__ == "__main__" and __package__ is None:
    __package__ = "crawler_threshold"

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd
from rich.console import Console
from rich.logging import RichHandler
from rich.panel import Panel
from rich.progress import (
    MofNCompleteColumn,
    SpinnerColumn,
    TimeElapsedColumn,
)
from rich.progress import (
    Progress as RichProgress,
)
from rich.table import Table
from rich.text import Text
from rich_argparse import RichHelpFormatter

from .config import config
from .errors import CrawlerThresholdError, PolicyError, ViolationsError
from .evaluate_policy import evaluate_policy
from .generator import build_generator
from .model_file import LoadedModel, dumps_model, load_model, packaged_model, packaged_models
from .optimizer import cost, optimize, sweep, sweep_parameters_values, threshold_curves
from .policy import ThresholdPolicy, format_policy, parse_policy
from .rich_dask_progress import SearchProgressCallback
from .simulator import SimConfig, simulate
from .sojourn import sojourn_lst
from .stationary_solver import solve, solver_methods_values
from .trace_ingest import bmap_template, ingest, read_timestamps

logger = logging.getLogger("crawler_threshold")

TITLE = "[red]Crawler threshold"


class UsageError(Exception):
    pass


def _configure_logging(console: Console, verbose: bool, quiet: bool):
    for handler in list(logger.handlers):
        if isinstance(handler, RichHandler):
            logger.removeHandler(handler)
    handler = RichHandler(console=console, show_path=False)
    logger.addHandler(handler)
    if verbose:
        logger.setLevel(logging.DEBUG)
    elif quiet:
        logger.setLevel(logging.WARNING)
    else:
        logger.setLevel(logging.INFO)


def _model_source(name: str):
    path = Path(name)
    if path.exists():
        return path
    if name in packaged_models:
        return packaged_model(name)
    msg = f"No model file {name!r}; pass a path or one of {', '.join(packaged_models)}"
    raise UsageError(msg)


def _load(args, default_mode: Optional[str] = None) -> LoadedModel:
    mode = default_mode
    if getattr(args, "repair", False):
        mode = "repair"
    elif getattr(args, "strict", False):
        mode = "strict"
    return load_model(_model_source(args.model), mode=mode)


def _policy(args, loaded: LoadedModel) -> ThresholdPolicy:
    model = loaded.model
    if args.policy is None:
        return ThresholdPolicy(K=model.K, modes=(model.N,))
    return parse_policy(args.policy, model.K)


def _mode_groups(text: str) -> List[List[int]]:
    """'4,1;3,1' -> [[4, 1], [3, 1]]."""
    try:
        return [[int(m) for m in group.split(",")] for group in text.split(";") if group.strip()]
    except ValueError as exc:
        msg = f"Expected mode lists like '4,1;3,1', got {text!r}"
        raise UsageError(msg) from exc


def _float_list(text: str) -> List[float]:
    """'0,0.5,1' -> [0.0, 0.5, 1.0]."""
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        msg = f"Expected comma-separated numbers, got {text!r}"
        raise UsageError(msg) from exc
    if not values:
        msg = f"Expected at least one number, got {text!r}"
        raise UsageError(msg)
    return values


def _range_or_list(values: str):
    """'1..8' -> [1, ..., 8]; anything else is a comma list."""
    if ".." not in values:
        return _float_list(values)
    try:
        first, last = values.split("..")
        return list(range(int(first), int(last) + 1))
    except ValueError as exc:
        msg = f"Cannot parse range {values!r}"
        raise UsageError(msg) from exc


def _flag_dest(name: str) -> str:
    return "sweep_" + name.lower().replace("-", "_")


def _sweep_values(args):
    """--param K=1..8, or a parameter flag such as --scale-service s=0.5,1,2."""
    if args.param is not None:
        name, sep, values = args.param.partition("=")
        if not sep or name not in sweep_parameters_values:
            msg = f"Expected PARAM=VALUES with PARAM in {', '.join(sweep_parameters_values)}, got {args.param!r}"
            raise UsageError(msg)
        return name, _range_or_list(values)
    for name in sweep_parameters_values:
        values = getattr(args, _flag_dest(name), None)
        if values is not None:
            # The label before '=' is optional: s=0.5,1 and 0.5,1 are the same
            return name, _range_or_list(values.rpartition("=")[2])
    msg = "Give --param or one of the parameter flags"
    raise UsageError(msg)


def _write_frame(frame: pd.DataFrame, out: Optional[str]):
    if out:
        frame.to_csv(out, index=False)
    else:
        sys.stdout.write(frame.to_csv(index=False))


def _write_text(text: str, out: Optional[str]):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _require_costs(loaded: LoadedModel):
    if loaded.costs is None:
        msg = "The model file has no costs section"
        raise UsageError(msg)
    return loaded.costs


def _measures_table(values: dict, title: str) -> Table:
    table = Table(title=title)
    table.add_column("measure")
    table.add_column("value", justify="right")
    for key, value in values.items():
        table.add_row(key, f"{value:.6g}" if isinstance(value, float) else str(value))
    return table


def _cmd_validate(args, console: Console, progress) -> int:  # noqa: ARG001
    loaded = _load(args, default_mode="strict")
    for repair in loaded.repairs:
        console.print(f"[yellow]repaired[/yellow] {repair}", highlight=False)
    model = loaded.model
    console.print(
        Panel(
            f"N={model.N} W={model.W} M={model.M} R={model.R} K={model.K} "
            f"states={model.num_states}",
            title=TITLE,
            subtitle="[red]valid",
            style="magenta",
        )
    )
    if args.canonicalize:
        _write_text(dumps_model(model, loaded.costs) + "\n", args.out)
    return 0


def _cmd_solve(args, console: Console, progress) -> int:  # noqa: ARG001
    loaded = _load(args)
    model = loaded.model
    pol = _policy(args, loaded)
    sol = solve(build_generator(model, pol), args.solver)
    console.print(
        f"{format_policy(pol)} method={sol.method} residual={sol.residual:.3g}",
        highlight=False,
    )
    if args.lst:
        summary = sojourn_lst(model, pol, sol, _float_list(args.lst))
        frame = pd.DataFrame(
            {
                "u": summary.u,
                "v": summary.v_of_u,
                "v1": summary.v1_of_u,
                "v2": summary.v2_of_u,
            }
        )
    else:
        levels = sol.level_probabilities()
        frame = pd.DataFrame(
            {
                "level": np.arange(levels.size),
                "probability": levels,
                "residual": sol.residual,
            }
        )
    _write_frame(frame, args.out)
    return 0


def _cmd_measures(args, console: Console, progress) -> int:  # noqa: ARG001
    loaded = _load(args)
    model = loaded.model
    pol = _policy(args, loaded)
    report = evaluate_policy(model, pol, args.solver)
    values = report.as_dict()
    if loaded.costs is not None:
        values["J"] = cost(report, loaded.costs)
    console.print(_measures_table(values, format_policy(pol)))
    _write_frame(pd.DataFrame([values]), args.out)
    return 0


def _cmd_optimize(args, console: Console, progress) -> int:
    loaded = _load(args)
    costs = _require_costs(loaded)
    model = loaded.model
    if args.K is not None and args.K != model.K:
        model = replace(model, K=args.K)
    if args.curves:
        frame = threshold_curves(
            model, costs, _mode_groups(args.curves), solver=args.solver, progress=progress
        )
        _write_frame(frame, args.out)
        return 0
    subsets = "all" if args.subsets == "all" else _mode_groups(args.subsets)
    result = optimize(
        model,
        costs,
        subsets=subsets,
        allow_skip=not args.strict_thresholds,
        solver=args.solver,
        progress=progress,
    )
    for reason in result.skipped:
        console.print(f"[yellow]skipped[/yellow] {reason}", highlight=False)
    if result.best_policy is None:
        console.print("[red]No policy could be evaluated")
        return 1
    fixed = Table(title="Fixed modes")
    fixed.add_column("robots")
    fixed.add_column("C", justify="right")
    for r, value in result.fixed_costs.items():
        fixed.add_row(str(r), f"{value:.2f}")
    console.print(Panel(fixed, title=TITLE, subtitle="[red]optimization", style="magenta"))
    best = result.best_policy
    console.print(
        f"J*={result.best_cost:.2f} modes={','.join(map(str, best.modes))} "
        f"thresholds={','.join(map(str, best.thresholds))} R={result.relative_profit:.2f}%",
        highlight=False,
        markup=False,
    )
    _write_frame(result.to_dataframe(), args.out)
    return 0


def _cmd_sweep(args, console: Console, progress) -> int:  # noqa: ARG001
    loaded = _load(args)
    costs = _require_costs(loaded)
    parameter, values = _sweep_values(args)
    subsets = "all" if args.subsets == "all" else _mode_groups(args.subsets)
    frame = sweep(
        loaded.model,
        costs,
        parameter,
        values,
        subsets=subsets,
        allow_skip=not args.strict_thresholds,
        solver=args.solver,
        progress=progress,
    )
    _write_frame(frame, args.out)
    return 0


def _cmd_simulate(args, console: Console, progress) -> int:  # noqa: ARG001
    loaded = _load(args)
    pol = _policy(args, loaded)
    cfg = SimConfig(
        n_arrivals=args.arrivals,
        warmup=args.warmup,
        seed=args.seed,
        n_batches=args.batches,
    )
    report = simulate(loaded.model, pol, cfg)
    table = Table(title=format_policy(pol))
    table.add_column("measure")
    table.add_column("estimate", justify="right")
    table.add_column("± 99%", justify="right")
    values = report.as_dict()
    for key, value in values.items():
        if key.endswith("_half_width") or f"{key}_half_width" not in values:
            continue
        table.add_row(key, f"{value:.6g}", f"{values[f'{key}_half_width']:.3g}")
    console.print(table)
    _write_frame(pd.DataFrame([values]), args.out)
    return 0


def _cmd_ingest(args, console: Console, progress) -> int:  # noqa: ARG001
    timestamps = read_timestamps(args.timestamps)
    report = ingest(timestamps, args.cutoff, args.epsilon, args.max_lag)
    values = {
        "n_timestamps": report.n_timestamps,
        "n_censored": report.n_censored,
        "n_pages": report.n_pages,
        **report.stats.as_dict(),
    }
    for key, value in values.items():
        console.print(f"{key}={value}", highlight=False, markup=False)
    console.print(
        Panel(Text(bmap_template(report.stats)), title=TITLE, subtitle="[red]template", style="magenta")
    )
    _write_frame(pd.DataFrame([values]), args.out)
    return 0


def _model_arguments(parser, policy: bool = False, solver: bool = True):
    parser.add_argument(
        "model", help=f"Model file (JSON) or packaged model: {', '.join(packaged_models)}"
    )
    repair = parser.add_mutually_exclusive_group()
    repair.add_argument(
        "--repair", action="store_true", help="Repair small matrix defects and log each repair"
    )
    repair.add_argument(
        "--strict", action="store_true", help="Reject any matrix defect"
    )
    parser.add_argument("-o", "--out", help="Write CSV output here instead of stdout")
    if policy:
        parser.add_argument(
            "-p", "--policy", help="Threshold policy, e.g. 'modes=4,1;thresholds=2'. Default: all robots always active"
        )
    if solver:
        parser.add_argument(
            "--solver", default="auto", choices=solver_methods_values, help="Stationary solver"
        )


def _search_arguments(parser):
    parser.add_argument(
        "--subsets",
        default="all",
        help="Mode subsets to search, 'all' or e.g. '4,1;3,2,1'",
    )
    parser.add_argument(
        "--strict-thresholds",
        action="store_true",
        help="Use every mode of a subset (strictly increasing thresholds)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crawler-threshold",
        description="Evaluate and optimize threshold control of crawler robots feeding a finite indexing queue.",
        formatter_class=RichHelpFormatter,
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    parser.add_argument(
        "-q", "--quiet", action="store_true", help="Do not display progress information"
    )
    parser.add_argument("--max-states", type=int, help="Largest chain to build")
    parser.add_argument("--workers", type=int, help="Parallel policy evaluations")
    parser.add_argument(
        "--scheduler",
        choices=["synchronous", "threads", "processes"],
        help="Dask scheduler for policy search",
    )
    subparsers = parser.add_subparsers(dest="command")

    validate_parser = subparsers.add_parser(
        "validate", help="Check a model file", formatter_class=RichHelpFormatter
    )
    _model_arguments(validate_parser, solver=False)
    validate_parser.add_argument(
        "--canonicalize", action="store_true", help="Emit the canonical model file"
    )
    validate_parser.set_defaults(func=_cmd_validate)

    solve_parser = subparsers.add_parser(
        "solve", help="Stationary level distribution of one policy", formatter_class=RichHelpFormatter
    )
    _model_arguments(solve_parser, policy=True)
    solve_parser.add_argument(
        "--lst",
        metavar="U1,U2,...",
        help="Tabulate the sojourn-time transforms at these arguments instead of the levels",
    )
    solve_parser.set_defaults(func=_cmd_solve)

    measures_parser = subparsers.add_parser(
        "measures", help="Performance measures of one policy", formatter_class=RichHelpFormatter
    )
    _model_arguments(measures_parser, policy=True)
    measures_parser.set_defaults(func=_cmd_measures)

    optimize_parser = subparsers.add_parser(
        "optimize", help="Search for the optimal threshold policy", formatter_class=RichHelpFormatter
    )
    _model_arguments(optimize_parser)
    _search_arguments(optimize_parser)
    optimize_parser.add_argument("-K", type=int, help="Override the capacity")
    optimize_parser.add_argument(
        "--curves",
        help="Instead of searching, tabulate J against the threshold for mode pairs, e.g. '4,1;3,1'",
    )
    optimize_parser.set_defaults(func=_cmd_optimize)

    sweep_parser = subparsers.add_parser(
        "sweep", help="Optimize across a parameter range", formatter_class=RichHelpFormatter
    )
    _model_arguments(sweep_parser)
    _search_arguments(sweep_parser)
    swept = sweep_parser.add_mutually_exclusive_group(required=True)
    swept.add_argument(
        "--param",
        help=f"PARAM=VALUES with PARAM in {', '.join(sweep_parameters_values)}, e.g. K=1..8 or scale-service=0.1,0.5,1",
    )
    for name in sweep_parameters_values[1:]:
        swept.add_argument(
            f"--{name}",
            dest=_flag_dest(name),
            metavar="VALUES",
            help=f"Same as --param {name}=VALUES; a leading label such as s= is ignored",
        )
    sweep_parser.set_defaults(func=_cmd_sweep)

    simulate_parser = subparsers.add_parser(
        "simulate", help="Discrete-event simulation of one policy", formatter_class=RichHelpFormatter
    )
    _model_arguments(simulate_parser, policy=True, solver=False)
    simulate_parser.add_argument("--arrivals", type=int, default=10**6, help="Batch arrivals to simulate")
    simulate_parser.add_argument("--seed", type=int, default=0, help="Random seed")
    simulate_parser.add_argument("--warmup", type=float, default=0.1, help="Fraction of arrivals discarded")
    simulate_parser.add_argument("--batches", type=int, default=30, help="Batches for the confidence intervals")
    simulate_parser.set_defaults(func=_cmd_simulate)

    ingest_parser = subparsers.add_parser(
        "ingest", help="Batch statistics of a timestamp trace", formatter_class=RichHelpFormatter
    )
    ingest_parser.add_argument("--timestamps", required=True, help="One timestamp per line")
    ingest_parser.add_argument("--cutoff", type=float, required=True, help="Longest kept inter-arrival time")
    ingest_parser.add_argument("--epsilon", type=float, required=True, help="Gaps shorter than this join a batch")
    ingest_parser.add_argument("--max-lag", type=int, default=6, help="Largest autocorrelation lag")
    ingest_parser.add_argument("-o", "--out", help="Write CSV output here instead of stdout")
    ingest_parser.set_defaults(func=_cmd_ingest)

    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Run one subcommand; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    console = Console(stderr=True)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    _configure_logging(console, args.verbose, args.quiet)

    if args.max_states is not None:
        config.max_states = args.max_states
        config.dense_cap = args.max_states
    if args.workers is not None:
        config.num_workers = args.workers
    if args.scheduler is not None:
        config.scheduler = args.scheduler

    progress = None
    rich_progress = None
    if not args.quiet and args.command in ("optimize", "sweep"):
        rich_progress = RichProgress(
            SpinnerColumn(),
            MofNCompleteColumn(),
            TimeElapsedColumn(),
            *RichProgress.get_default_columns(),
            transient=True,
            console=console,
        )
        progress = SearchProgressCallback(rich_progress)
        progress.register()
        rich_progress.start()
    try:
        return args.func(args, console, progress)
    except ViolationsError as exc:
        sys.stdout.write(json.dumps(exc.violations, indent=2) + "\n")
        return 1
    except (UsageError, PolicyError) as exc:
        console.print(f"[red]{exc}", highlight=False)
        return 2
    except CrawlerThresholdError as exc:
        sys.stdout.write(json.dumps([str(exc)], indent=2) + "\n")
        return 1
    except ValueError as exc:
        console.print(f"[red]{exc}", highlight=False)
        return 2
    finally:
        if progress is not None:
            progress.unregister()
            rich_progress.stop()


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
