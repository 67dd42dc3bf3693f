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

from dsfl_sim.brute_force import MAX_GRID_LEVELS, brute_force, power_grid
from dsfl_sim.bsum_solver import SolverParams, objective, solve
from dsfl_sim.channel import compute_channel
from dsfl_sim.cost_model import CostEvaluator, CostParams
from dsfl_sim.errors import InstanceTooLargeError
from dsfl_sim.scenario import ScenarioConfig, generate_scenario
from .utils.unit_test_utils import make_scenario


def _objective(scenario, solution, params=None):
    params = params if params is not None else CostParams()
    return objective(CostEvaluator(scenario, compute_channel(scenario), params), solution)


def test_power_grid():
    grid = power_grid(0.2, 4)

    assert list(grid) == pytest.approx([0.05, 0.1, 0.15, 0.2])


@pytest.mark.parametrize("config", [
    ScenarioConfig(num_devices=5, num_servers=2, num_resource_blocks=3),
    ScenarioConfig(num_devices=3, num_servers=2, num_resource_blocks=4),
    ScenarioConfig(num_devices=3, num_servers=3, num_resource_blocks=3),
])
def test_guard_refuses_large_instances(config):
    scenario = generate_scenario(config, 0)

    with pytest.raises(InstanceTooLargeError):
        brute_force(scenario, power_grid(0.2, 4))


def test_guard_refuses_fine_grids():
    scenario = generate_scenario(ScenarioConfig(num_devices=1, num_servers=1, num_resource_blocks=1), 0)

    with pytest.raises(InstanceTooLargeError):
        brute_force(scenario, power_grid(0.2, MAX_GRID_LEVELS + 1))


def test_no_resource_blocks_is_infeasible():
    scenario = make_scenario([(100.0, 0.0)], [(0.0, 0.0)], [])

    solution = brute_force(scenario, power_grid(scenario.max_tx_powers[0], 8))

    assert not solution.feasible
    assert solution.uncovered_devices == (0,)
    assert solution.power[0] == 0.0


def test_single_device_agrees_with_solve():
    scenario = make_scenario([(250.0, 100.0)], [(0.0, 0.0)], [(600.0, 200.0)])
    grid = power_grid(scenario.max_tx_powers[0], MAX_GRID_LEVELS)

    exhaustive = _objective(scenario, brute_force(scenario, grid))
    solved = _objective(scenario, solve(scenario, SolverParams())[0])

    assert solved[0] == exhaustive[0] == 0
    assert solved[1] <= exhaustive[1] * (1 + 1e-9)


def test_brute_force_picks_theta_min_in_literal_mode():
    scenario = make_scenario([(100.0, 0.0), (0.0, 100.0)], [(0.0, 0.0)], [(500.0, 0.0), (0.0, 500.0)], capacity=2)

    solution = brute_force(scenario, power_grid(scenario.max_tx_powers[0], 4))

    assert solution.feasible
    assert list(solution.theta) == [CostParams().theta_min] * 2


@pytest.mark.parametrize("seed", range(10))
def test_solve_within_five_percent_of_exhaustive(seed):
    scenario = generate_scenario(ScenarioConfig(num_devices=3, num_servers=2, num_resource_blocks=2), seed)
    grid = power_grid(scenario.max_tx_powers[0], 8)

    exhaustive = _objective(scenario, brute_force(scenario, grid))
    solved = _objective(scenario, solve(scenario, SolverParams(), seed=seed)[0])

    assert solved[0] <= exhaustive[0]
    assert solved[1] <= 1.05 * exhaustive[1]
