import argparse
import logging
import logging.config
import sys

from pathlib import Path
from typing import Optional, Sequence

from pydantic import ValidationError

from ..config import DecouplingMetrologyMetadata, EngineConfig, LogConfig
from ..utils import (
    DecouplingInfeasible,
    DimensionCapExceeded,
    DimensionMismatch,
    FidelityComputationError,
    InsufficientSweepPoints,
    InvalidConfiguration,
    InvalidDensityMatrix,
    InvalidFactorIndex,
    InvalidPauliIndex,
    InvalidSchedule,
    InvalidSchemeRange,
    InvalidUnitVector,
    MissingScenarioField,
    MixedParallelDirections,
    NotHermitian,
    NotUnitary,
    RankTooHigh,
    ScenarioParseError,
    SpaceMismatch,
    UnnormalizedDistribution,
    UnsupportedDistributionOperation,
    ZeroFisherInformation,
)
from .commands import cmd_analyze, cmd_evolve, cmd_qfi, cmd_sweep
from .output import CSV, JSON, OutputSink
from .reproduce import DETERMINISM, determinism, run_criteria
from .scenario import load_scenario

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ACCEPTANCE_FAILED = 1
EXIT_SCENARIO_ERROR = 2

SCENARIO_ERRORS = (
    ScenarioParseError,
    MissingScenarioField,
    ValidationError,
    DimensionCapExceeded,
    DimensionMismatch,
    NotHermitian,
    NotUnitary,
    InvalidUnitVector,
    InvalidPauliIndex,
    InvalidSchedule,
    InvalidSchemeRange,
    SpaceMismatch,
    DecouplingInfeasible,
    MixedParallelDirections,
    UnnormalizedDistribution,
    UnsupportedDistributionOperation,
    InvalidConfiguration,
    InvalidDensityMatrix,
    InvalidFactorIndex,
    InsufficientSweepPoints,
    ZeroFisherInformation,
    FidelityComputationError,
    RankTooHigh,
)

SCENARIO_COMMANDS = {
    "analyze": cmd_analyze,
    "evolve": cmd_evolve,
    "qfi": cmd_qfi,
    "sweep": cmd_sweep,
}
DEFAULT_REPRODUCE_DIR = "ddm-output"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=DecouplingMetrologyMetadata.name,
        description=" ".join(DecouplingMetrologyMetadata.description.split()),
    )
    parser.add_argument("--version", action="version", version=DecouplingMetrologyMetadata.version)
    commands = parser.add_subparsers(dest="command", required=True)
    for name, help_text in DecouplingMetrologyMetadata.commands.items():
        command = commands.add_parser(name, help=help_text, description=help_text)
        if name in SCENARIO_COMMANDS:
            command.add_argument("--scenario", required=True, type=Path, help="Scenario JSON file")
        else:
            command.add_argument(
                "--criteria",
                type=lambda text: [int(part) for part in text.split(",") if part],
                default=None,
                help="Comma-separated criterion numbers to run (default: all)",
            )
        command.add_argument("--out", type=Path, default=None, help="Output directory")
        command.add_argument("--seed", type=int, default=None, help="Seed for every random stream")
        command.add_argument("--threads", type=int, default=None, help="Worker threads for sweeps")
        command.add_argument("--format", choices=[CSV, JSON], default=CSV, help="Table format")
    return parser


def _configure_logging():
    logging.config.dictConfig(LogConfig().log_config)


def _run_scenario_command(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    seed = args.seed if args.seed is not None else scenario.seed
    if args.seed is not None:
        scenario = scenario.model_copy(update={"seed": args.seed})
    sink = OutputSink(args.out, args.format)
    command = SCENARIO_COMMANDS[args.command]
    if args.command == "qfi":
        command(scenario, sink, seed)
    else:
        command(scenario, sink)
    sink.manifest(args.command, scenario, seed)
    return EXIT_OK


def _run_reproduce(args: argparse.Namespace) -> int:
    seed = 0 if args.seed is None else args.seed
    sink = OutputSink(args.out or Path(DEFAULT_REPRODUCE_DIR), args.format)
    results = run_criteria(seed, args.criteria)
    numbered = list(results)
    if args.criteria is None or DETERMINISM in args.criteria:
        numbered.append((DETERMINISM, determinism(seed, results)))
    summary = []
    for number, result in numbered:
        sink.table(f"criterion_{number:02d}_{result.key}", result.rows, result.columns)
        summary.append(
            {
                "criterion": number,
                "name": result.key,
                "status": "PASS" if result.passed else "FAIL",
                "metric": result.metric,
                "tolerance": result.tolerance,
            }
        )
    sink.table("summary", summary, ["criterion", "name", "status", "metric", "tolerance"])
    sink.manifest(args.command, None, seed)
    failed = [row["name"] for row in summary if row["status"] == "FAIL"]
    if failed:
        logger.error(f"[CLI: reproduce-paper] Failed criteria: {', '.join(failed)}")
        return EXIT_ACCEPTANCE_FAILED
    logger.info(f"[CLI: reproduce-paper] All {len(summary)} criteria passed")
    return EXIT_OK


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    _configure_logging()
    config = EngineConfig.get_or_create_instance()
    if args.threads is not None:
        config.runtime["threads"] = max(1, args.threads)
    logger.debug(f"[CLI: {args.command}] Threads: {config.threads}")
    try:
        if args.command == "reproduce-paper":
            return _run_reproduce(args)
        return _run_scenario_command(args)
    except SCENARIO_ERRORS as e:
        logger.error(f"[CLI: {args.command}] {getattr(e, 'message', str(e))}")
        return EXIT_SCENARIO_ERROR


def main() -> None:
    sys.exit(run())
