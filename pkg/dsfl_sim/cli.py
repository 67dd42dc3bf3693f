#  Copyright The dsfl_sim Authors. All Rights Reserved.
#
#  Licensed under the Apache License, Version 2.0 (the "License").
#  You may not use this file except in compliance with the License.
#  You may obtain a copy of the License at
#
#  http://www.apache.org/licenses/LICENSE-2.0
#
#  Unless required by applicable law or agreed to in writing, software
#  distributed under the License is distributed on an "AS IS" BASIS,
#  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
#  See the License for the specific language governing permissions and
#  limitations under the License.

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

from dsfl_sim import set_logger
from dsfl_sim.config import parse_config
from dsfl_sim.errors import (DatasetFormatError, DsflSimError,
                             InfeasibleAllocationError, InvalidConfigError)
from dsfl_sim.experiments import (run_cost_surface, run_optimize, run_scenario,
                                  run_solver_compare, run_sweep,
                                  run_training_curves)
from dsfl_sim.utils.log import Logger
from dsfl_sim.utils.messages import Messages
from dsfl_sim.utils.utils import SeedUtils

logger = Logger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_INFEASIBLE = 4

# subcommand -> experiment kind echoed into the resolved configuration
EXPERIMENT_KINDS = {
    "cost-surface": "cost_surface",
    "solver-compare": "solver_compare",
    "train-curves": "training_curves",
    "sweep": "custom",
}


def _common_options() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--config", type=Path, help="TOML configuration file.")
    parser.add_argument("--out", type=Path, help="Output directory (overrides [experiment] output_dir).")
    parser.add_argument("--seed", type=int, help="Seed of single-run commands.")
    parser.add_argument("--seeds", help='Seeds of an experiment: "0..19" or "0,4,7".')
    parser.add_argument("--data-dir", type=Path, help="Directory holding the MNIST IDX files.")
    parser.add_argument("--log-level", default="WARNING",
                        choices=("DEBUG", "INFO", "WARNING", "ERROR"), help="Console log level.")
    return parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dsfl-sim", description="Distributed split federated learning simulator.")
    commands = parser.add_subparsers(dest="command", required=True)
    common = _common_options()
    commands.add_parser("scenario", parents=[common], help="Generate a scenario and write its snapshot.")
    commands.add_parser("optimize", parents=[common], help="Run one joint allocation solve.")
    commands.add_parser("cost-surface", parents=[common], help="Tabulate device cost over theta and SINR.")
    commands.add_parser("solver-compare", parents=[common], help="Compare the solver with both baselines.")
    commands.add_parser("train-curves", parents=[common], help="Train DSFL and SFL on MNIST.")
    commands.add_parser("sweep", parents=[common], help="Sweep a scenario count for every scheme.")
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Dict[str, Any]]:
    overrides: Dict[str, Dict[str, Any]] = {}
    if args.command in EXPERIMENT_KINDS:
        overrides.setdefault("experiment", {})["kind"] = EXPERIMENT_KINDS[args.command]
    if args.out is not None:
        overrides.setdefault("experiment", {})["output_dir"] = str(args.out)
    if args.seeds is not None:
        try:
            seeds = list(SeedUtils.parse_seeds(args.seeds))
        except ValueError as e:
            raise InvalidConfigError(Messages.get_formatted("Cli.InvalidSeeds", args.seeds), key="seeds") from e
        overrides.setdefault("experiment", {})["seeds"] = seeds
    if args.seed is not None:
        overrides.setdefault("scenario", {})["seed"] = args.seed
    if args.data_dir is not None:
        overrides.setdefault("training", {})["data_dir"] = str(args.data_dir)
    return overrides


def exit_code(error: BaseException) -> int:
    if isinstance(error, InvalidConfigError):
        return EXIT_CONFIG
    if isinstance(error, (DatasetFormatError, OSError)):
        return EXIT_DATA
    if isinstance(error, InfeasibleAllocationError):
        return EXIT_INFEASIBLE
    return EXIT_ERROR


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    set_logger(level=getattr(logging, args.log_level))

    commands: Dict[str, Callable[..., List[Path]]] = {
        "scenario": run_scenario,
        "optimize": run_optimize,
        "cost-surface": run_cost_surface,
        "solver-compare": run_solver_compare,
        "train-curves": run_training_curves,
        "sweep": run_sweep,
    }
    try:
        spec = parse_config(args.config, _overrides(args))
        written = commands[args.command](spec)
    except (DsflSimError, OSError) as e:
        code = exit_code(e)
        logger.debug("Cli.Failed", args.command, type(e).__name__, e)
        print(Messages.get_formatted("Cli.Failed", args.command, type(e).__name__, e), file=sys.stderr)
        return code

    for path in written:
        print(path)
    return EXIT_OK
