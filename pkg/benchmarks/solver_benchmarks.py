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

import numpy as np
import pytest

from dsfl_sim.bsum_solver import (SolverParams, initial_solution, solve,
                                  update_association_block, update_power_block,
                                  update_rb_block)
from dsfl_sim.channel import compute_channel
from dsfl_sim.cost_model import CostEvaluator
from dsfl_sim.scenario import ScenarioConfig, generate_scenario
from dsfl_sim.split_model import SplitModel, split_training_step


@pytest.fixture(scope="module")
def scenario():
    return generate_scenario(ScenarioConfig(), 0)


@pytest.fixture(scope="module")
def channel(scenario):
    return compute_channel(scenario)


@pytest.fixture(scope="module")
def params():
    return SolverParams()


@pytest.fixture(scope="module")
def start(scenario, channel, params):
    return initial_solution(scenario, CostEvaluator(scenario, channel, params.cost), params)


def test_compute_channel(benchmark, scenario):
    benchmark(compute_channel, scenario)


def test_association_block(benchmark, scenario, channel, params, start):
    benchmark(update_association_block, start, scenario, params, channel)


def test_rb_block(benchmark, scenario, channel, params, start):
    benchmark(update_rb_block, start, scenario, params, channel)


def test_power_block(benchmark, scenario, channel, params, start):
    benchmark(update_power_block, start, scenario, params, channel)


def test_solve_single_start(benchmark, scenario, channel):
    benchmark(solve, scenario, SolverParams(restarts=1), channel=channel)


def test_split_training_step(benchmark):
    rng = np.random.default_rng(0)
    model = SplitModel.create(rng=rng)
    batch = (rng.uniform(0.0, 1.0, size=(32, 784)), rng.integers(0, 10, size=32))

    benchmark(split_training_step, model.device_part, model.server_part, batch, 0.05)
