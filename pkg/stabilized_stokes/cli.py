"""
Command-line driver for the stabilised Stokes experiments.

Subcommands:
- single:      one solve at the finest level of --levels
- convergence: refinement sweep with rates
- compare:     twin BVS/PSPG solves and the boundary-layer ratio
- sweep:       one refinement sweep per gamma in --gammas

Exit codes: 0 success, 2 configuration error, 3 solver failure.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from stabilized_stokes.constants import ExitCodes
from stabilized_stokes.fem.linsolve import SolverError
from stabilized_stokes.helper.confighelper import ConfigFileError, load_run_config, parse_level_range
from stabilized_stokes.schemas import DeltaFormula, ExperimentName, Method, MomentumForm, RunConfig
from stabilized_stokes.services.experiment_service import ExperimentService
from stabilized_stokes.settings import get_settings

logger = logging.getLogger(__name__)


# ============================================================================
# Argument Parsing
# ============================================================================

def _gamma_list(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"Invalid gamma list '{text}': {e}") from e


def _key_value(text: str) -> tuple:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"Expected key=value, got '{text}'")
    key, value = text.split("=", 1)
    return key.strip(), value.strip()


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--experiment", default=None,
        help=f"Case name ({', '.join(e.value for e in ExperimentName)}) or path to a key = value file",
    )
    common.add_argument("--method", choices=[m.value for m in Method], default=None)
    common.add_argument("--form", choices=[f.value for f in MomentumForm], default=None)
    common.add_argument("--gamma", type=float, default=None)
    common.add_argument("--delta-formula", choices=[d.value for d in DeltaFormula], default=None)
    common.add_argument("--C", type=float, default=None, dest="C", help="Trace-constant surrogate")
    common.add_argument("--levels", default=None, help="Level range A..B")
    common.add_argument("--reaction-in-residual", action=argparse.BooleanOptionalAction, default=None)
    common.add_argument(
        "--viscous-residual", action=argparse.BooleanOptionalAction, default=None, dest="include_viscous_residual",
        help="PSPG: keep the 2 sym(grad u) grad nu residual term",
    )
    common.add_argument("--param", type=_key_value, action="append", default=[], help="Case parameter key=value")
    common.add_argument("--out", type=Path, default=None, help="Output directory")
    common.add_argument("--vtk", action="store_true", default=None, help="Write VTK solution files")
    common.add_argument("--workers", type=int, default=None, help="Concurrent levels in a sweep")

    parser = argparse.ArgumentParser(prog="stabilized_stokes", description="Stabilised P1/P1 Stokes experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("single", parents=[common], help="Solve one level")
    sub.add_parser("convergence", parents=[common], help="Refinement sweep with convergence rates")
    sub.add_parser("compare", parents=[common], help="BVS versus PSPG at one level")
    sweep = sub.add_parser("sweep", parents=[common], help="Refinement sweep per gamma")
    sweep.add_argument("--gammas", type=_gamma_list, required=True, help="Comma-separated gamma values")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """
    Merge command-line flags, an optional configuration file and the environment.

    Raises:
        ConfigFileError: malformed configuration file
        ValidationError: invalid flag values
        ValueError: malformed level range
    """
    overrides = {
        key: value
        for key, value in {
            "method": args.method,
            "form": args.form,
            "gamma": args.gamma,
            "delta_formula": args.delta_formula,
            "C": args.C,
            "reaction_in_residual": args.reaction_in_residual,
            "include_viscous_residual": args.include_viscous_residual,
            "output_dir": args.out,
            "vtk": args.vtk,
            "workers": args.workers,
        }.items()
        if value is not None
    }
    if args.levels is not None:
        overrides["level_min"], overrides["level_max"] = parse_level_range(args.levels)

    settings = get_settings()
    if settings.output_dir is not None:
        overrides["output_dir"] = settings.output_dir

    experiment = args.experiment or ExperimentName.EXP1.value
    if experiment in {e.value for e in ExperimentName}:
        config = RunConfig(experiment=experiment, **overrides)
    else:
        config = load_run_config(Path(experiment), **overrides)

    if args.param:
        config = RunConfig.model_validate({
            **config.model_dump(),
            "case_parameters": {**config.case_parameters, **dict(args.param)},
        })
    return config


# ============================================================================
# Entry Point
# ============================================================================

def main(argv: Optional[List[str]] = None) -> int:
    settings = get_settings()
    logging.basicConfig(
        level=getattr(logging, settings.log_level.upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[
            logging.StreamHandler(sys.stdout)
        ]
    )

    args = build_parser().parse_args(argv)
    service = ExperimentService()
    try:
        config = config_from_args(args)
        logger.info(f"🚀 Running '{args.command}' for {config.experiment.value}, output in {config.output_dir}")

        if args.command == "single":
            service.run_single(config)
        elif args.command == "convergence":
            service.run_convergence(config)
        elif args.command == "compare":
            service.run_compare(config)
        else:
            service.run_gamma_sweep(config, args.gammas)

    except (ValidationError, ConfigFileError, ValueError) as e:
        logger.error(f"❌ Configuration error: {e}")
        return ExitCodes.CONFIG_ERROR
    except SolverError as e:
        logger.error(f"❌ Solver failure: {e}")
        return ExitCodes.SOLVER_FAILURE

    logger.info("✅ Done")
    return ExitCodes.SUCCESS
