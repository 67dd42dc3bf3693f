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

import pytest

from dsfl_sim.bsum_solver import SolverParams
from dsfl_sim.channel import compute_channel
from dsfl_sim.cost_model import CostEvaluator, CostParams
from dsfl_sim.scenario import ScenarioConfig, generate_scenario


@pytest.fixture
def cost_params():
    return CostParams()


@pytest.fixture
def solver_params():
    return SolverParams()


@pytest.fixture
def small_config():
    return ScenarioConfig(num_devices=6, num_servers=2, num_resource_blocks=6)


@pytest.fixture
def small_scenario(small_config):
    return generate_scenario(small_config, 3)


@pytest.fixture
def small_channel(small_scenario):
    return compute_channel(small_scenario)


@pytest.fixture
def small_evaluator(small_scenario, small_channel, cost_params):
    return CostEvaluator(small_scenario, small_channel, cost_params)
