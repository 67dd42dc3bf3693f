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

from logging import DEBUG, getLogger

from .bsum_solver import SolverParams, baseline_a, baseline_r, solve
from .config import ExperimentSpec, parse_config
from .cost_model import CostParams, total_cost
from .errors import (DatasetFormatError, DsflSimError,
                     InfeasibleAllocationError, InstanceTooLargeError,
                     InvalidArgumentError, InvalidConfigError,
                     ShapeMismatchError, UnknownEntityError)
from .scenario import ScenarioConfig, generate_scenario
from .utils.utils import LogUtils

__version__ = "0.1.0"

__all__ = [
    "CostParams", "DatasetFormatError", "DsflSimError", "ExperimentSpec", "InfeasibleAllocationError",
    "InstanceTooLargeError", "InvalidArgumentError", "InvalidConfigError", "ScenarioConfig", "ShapeMismatchError",
    "SolverParams", "UnknownEntityError", "baseline_a", "baseline_r", "generate_scenario", "parse_config", "set_logger",
    "solve", "total_cost",
]


def set_logger(name='dsfl_sim', level=DEBUG, format_string=None):
    LogUtils.setup_logger(getLogger(name), level, format_string)
