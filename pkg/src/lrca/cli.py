"""argparse surface: simulate, power, calibrate, test, ci, describe."""
from __future__ import annotations

import argparse
import logging
from pathlib import Path
from typing import Optional, Sequence

from lrca.config import POWER_GRID
from lrca.designs import family_of
from lrca.errors import UsageError
from lrca.families import describe, get_family
from lrca.models import ExperimentConfig, RunConfig
from lrca.montecarlo import null_calibration, run_level_experiment, run_power_experiment
from lrca.persistence import archive_run
from lrca.reporting import (
    calibration_frame,
    interval_frame,
    markdown,
    outcomes_frame,
    power_frame,
    rejection_frame,
    write_frame,
)
from lrca.workflows import build_interval, run_test

logger = logging.getLogger(__name__)

COMMANDS = ("simulate", "test", "ci", "power", "calibrate", "describe")


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def _grid(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"grid must be comma-separated numbers, got {text!r}") from e


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lrca", description="Boundary-robust LRC_α tests and Monte Carlo experiments.")
    parser.add_argument("--verbose", action="store_true", help="Log at DEBUG level.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="{" + ",".join(COMMANDS) + "}")

    def experiment(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", type=Path, required=True, help="ExperimentConfig JSON file.")
        p.add_argument("--seed", type=int, help="Override the config's master_seed.")
        p.add_argument("--workers", type=int, help="Worker processes for replications.")
        p.add_argument("--out", type=Path, help="Directory for CSV/markdown output.")
        p.add_argument("--format", dest="formats", nargs="+", choices=["csv", "md"], default=["csv", "md"])
        p.add_argument("--archive", type=Path, help="SQLite file to archive the run in.")
        return p

    experiment("simulate", "Rejection rates under the null.")
    power = experiment("power", "Power curve over a grid of null values.")
    power.add_argument("--grid", type=_grid, help="Comma-separated null values for the first restricted parameter.")
    experiment("calibrate", "Null distribution of the statistics against χ²_q.")

    def data_command(name: str, help_text: str, level: float) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--model", required=True, help="arch, weibull or error-components (ec).")
        p.add_argument("--data", type=Path, required=True, help="CSV data file.")
        p.add_argument("--level", type=float, default=level)
        p.add_argument("--order", type=int, default=1, help="ARCH order p.")
        p.add_argument("--info", choices=["opg", "opg-centered", "hessian"], help="Information estimator.")
        p.add_argument("--se", choices=["hessian", "sandwich"], default="hessian")
        p.add_argument("--out", type=Path, help="Directory for CSV/markdown output.")
        p.add_argument("--format", dest="formats", nargs="+", choices=["csv", "md"], default=["csv", "md"])
        return p

    test = data_command("test", "Test a restriction on user data.", 0.05)
    test.add_argument("--restrict", required=True, help='"name=v[,name=v]" or "c1*p1+c2*p2=v".')
    test.add_argument("--shape-restricted", action="store_true", help="Weibull: impose η ≥ 1 under the null.")
    ci = data_command("ci", "Confidence interval for one parameter.", 0.95)
    ci.add_argument("--param", required=True)
    ci.add_argument("--method", choices=["inversion", "t"], default="inversion")

    desc = sub.add_parser("describe", help="Parameters, bounds and data format of a model.")
    desc.add_argument("model")
    return parser


def _experiment(args: argparse.Namespace) -> ExperimentConfig:
    if not args.config.is_file():
        raise UsageError(f"config file not found: {args.config}")
    config = ExperimentConfig.model_validate_json(args.config.read_text())
    overrides = {}
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.workers is not None:
        overrides["workers"] = args.workers
    return ExperimentConfig.model_validate({**config.model_dump(), **overrides}) if overrides else config


def to_run_config(args: argparse.Namespace) -> RunConfig:
    """Validated RunConfig from parsed arguments; raises ValidationError."""
    fields = {"command": args.command}
    if args.command in ("simulate", "power", "calibrate"):
        fields.update(experiment=_experiment(args), out=args.out, formats=args.formats, archive=args.archive)
        if args.command == "power":
            fields["grid"] = args.grid
    elif args.command in ("test", "ci"):
        fields.update(
            model=args.model, data=args.data, level=args.level, order=args.order,
            info=args.info, se=args.se, out=args.out, formats=args.formats,
        )
        if args.command == "test":
            fields.update(restrict=args.restrict, shape_restricted=args.shape_restricted)
        else:
            fields.update(param=args.param, method=args.method)
    else:
        fields["model"] = args.model
    return RunConfig.model_validate(fields)


def _emit(frame, config: RunConfig, stem: str) -> None:
    print(markdown(frame), end="")
    if config.out is not None:
        write_frame(frame, config.out, stem, config.formats)


def _archive(config: RunConfig, result) -> None:
    if config.archive is not None:
        run_id = archive_run(str(config.archive), config.command, config, result)
        logger.info("archived as run %d in %s", run_id, config.archive)


def run(config: RunConfig) -> int:
    """Execute one command; errors propagate to the entry point."""
    exp = config.experiment
    if config.command == "describe":
        print(describe(config.model))
    elif config.command == "simulate":
        table = run_level_experiment(exp)
        _emit(rejection_frame(table), config, f"rejection_{exp.dgp}_n{exp.n}")
        print(f"replications: {table.replications}, failures: {table.failures}")
        _archive(config, table)
    elif config.command == "power":
        grid = config.grid
        if grid is None:
            if family_of(exp.dgp) != "weibull":
                raise UsageError("--grid is required for non-Weibull power curves")
            grid = list(POWER_GRID)
        curve = run_power_experiment(exp, grid)
        _emit(power_frame(curve), config, f"power_{exp.dgp}_n{exp.n}")
        _archive(config, curve)
    elif config.command == "calibrate":
        summaries = null_calibration(exp)
        _emit(calibration_frame(summaries), config, f"calibration_{exp.dgp}_n{exp.n}")
        _archive(config, summaries)
    elif config.command == "test":
        family = get_family(config.model, config.order)
        report = run_test(
            family, family.load(config.data), config.restrict, config.level,
            config.info, config.shape_restricted, config.se,
        )
        print(f"H0: {report.restriction}")
        _emit(outcomes_frame(report.outcomes), config, f"test_{family.id}")
    else:
        family = get_family(config.model, config.order)
        interval = build_interval(
            family, family.load(config.data), config.param, config.level,
            config.method, config.info, config.se,
        )
        _emit(interval_frame(config.param, [interval]), config, f"ci_{family.id}_{config.param}")
    return 0


def parse(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    return build_parser().parse_args(argv)
