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

import math

import numpy as np
import pytest

from dsfl_sim.allocation import AllocationSolution
from dsfl_sim.channel import achievable_rate, compute_channel, sinr
from dsfl_sim.cost_model import (INFEASIBLE, CostEvaluator, CostParams,
                                 device_cost, local_compute_energy,
                                 local_compute_time, local_iterations,
                                 total_cost, transmission_energy,
                                 transmission_latency)
from dsfl_sim.errors import InvalidArgumentError, InvalidConfigError
from .utils.unit_test_utils import make_scenario


def test_transmission_latency():
    assert transmission_latency(1e6, 1e6) == 1.0
    assert transmission_latency(1e6, 0.0) == INFEASIBLE
    assert transmission_latency(180_000.0, achievable_rate(1.0, 180_000.0)) == pytest.approx(1.0)


@pytest.mark.parametrize("size, rate", [(1e6, -1.0), (0.0, 1e6)])
def test_transmission_latency_invalid(size, rate):
    with pytest.raises(InvalidArgumentError):
        transmission_latency(size, rate)


def test_transmission_energy():
    assert transmission_energy(0.1, 2.0) == pytest.approx(0.2)
    assert transmission_energy(0.0, 17.0) == 0.0
    assert transmission_energy(0.2, transmission_latency(1e6, 1e6)) == pytest.approx(0.2)
    assert transmission_energy(0.2, INFEASIBLE) == INFEASIBLE


@pytest.mark.parametrize("theta, a, expected", [(1.0, 10.0, 0), (1.0, 3.0, 0), (0.1, 10.0, 24), (0.5, 10.0, 7)])
def test_local_iterations(theta, a, expected):
    assert local_iterations(theta, a) == expected


@pytest.mark.parametrize("theta", [0.0, -0.1, 1.5])
def test_local_iterations_domain(theta):
    with pytest.raises(InvalidArgumentError):
        local_iterations(theta, 10.0)


def test_local_compute_time():
    assert local_compute_time(300, 1e6, 1e9, 1) == pytest.approx(0.3)
    assert local_compute_time(300, 1e6, 1e9, 0) == 0.0
    assert local_compute_time(600, 1e6, 1e9, 10) == pytest.approx(6.0)
    with pytest.raises(InvalidArgumentError):
        local_compute_time(300, 1e6, 0.0, 1)


def test_local_compute_energy():
    assert local_compute_energy(300, 1e6, 1e9, 2, 1e-28) == pytest.approx(2 * 1e-28 * 3e8 * 1e18)


@pytest.mark.parametrize("theta, latency, energy, expected", [
    (0.0, 2.0, 1.0, 1.5),
    (1.0, 2.0, 1.0, 3.0),
    (0.5, 1.0, 1.0, 1.5),
])
def test_device_cost(theta, latency, energy, expected):
    assert device_cost(theta, latency, energy, CostParams()) == pytest.approx(expected)


def test_device_cost_infeasible_latency():
    assert device_cost(0.5, INFEASIBLE, INFEASIBLE, CostParams()) == INFEASIBLE


def test_device_cost_with_local_compute():
    params = CostParams(include_local_compute=True)

    assert device_cost(0.0, 2.0, 1.0, params, compute_time=2.0, compute_energy=1.0) == pytest.approx(3.0)
    assert device_cost(0.0, 2.0, 1.0, CostParams(), compute_time=2.0, compute_energy=1.0) == pytest.approx(1.5)


@pytest.mark.parametrize("kwargs, key", [
    ({"weight_latency": 0.7, "weight_energy": 0.7}, "weight_latency"),
    ({"theta_min": 0.9, "theta_max": 0.5}, "theta_min"),
    ({"upload_size": 0.0}, "upload_size_bits"),
    ({"p_min": 0.0}, "p_min_w"),
])
def test_cost_params_validation(kwargs, key):
    with pytest.raises(InvalidConfigError) as e:
        CostParams(**kwargs).validate()
    assert e.value.key == key


def _single(distance, interferer=(0.0, 500.0)):
    scenario = make_scenario([(distance, 0.0)], [(0.0, 0.0)], [interferer])
    return scenario, compute_channel(scenario)


def _solution(power, theta=0.05):
    return AllocationSolution.from_indices(np.array([power]), np.array([0]), np.array([0]), np.array([theta]), 1, 1)


def test_total_cost_composes_scalar_model():
    params = CostParams()
    scenario, channel = _single(120.0)
    power = 0.05

    rate = achievable_rate(sinr(0, 0, 0, power, scenario, channel), 180_000.0)
    latency = transmission_latency(params.upload_size, rate)
    expected = device_cost(0.05, latency, transmission_energy(power, latency), params)
    breakdown = total_cost(_solution(power), scenario, channel, params)

    assert breakdown.feasible
    assert breakdown.total_cost == pytest.approx(expected, rel=1e-12)
    assert breakdown.devices[0].latency_trans == pytest.approx(latency, rel=1e-12)


def test_higher_sinr_lowers_total_cost():
    params = CostParams()
    far_scenario, far_channel = _single(300.0)
    near_scenario, near_channel = _single(50.0)

    far = total_cost(_solution(0.1), far_scenario, far_channel, params).total_cost
    near = total_cost(_solution(0.1), near_scenario, near_channel, params).total_cost

    assert near < far


def test_total_cost_deterministic():
    scenario, channel = _single(200.0)

    assert total_cost(_solution(0.1), scenario, channel, CostParams()) \
        == total_cost(_solution(0.1), scenario, channel, CostParams())


def test_total_cost_unassigned_device_is_infeasible(small_scenario, small_channel, cost_params):
    devices = small_scenario.num_devices
    rb = np.arange(devices)
    rb[2] = -1
    solution = AllocationSolution.from_indices(
        small_scenario.max_tx_powers, rb, np.arange(devices) % 2, np.full(devices, 0.05),
        small_scenario.num_resource_blocks, small_scenario.num_servers)

    breakdown = total_cost(solution, small_scenario, small_channel, cost_params)

    assert not breakdown.feasible
    assert not breakdown.devices[2].feasible
    assert math.isfinite(breakdown.served_cost)


def test_total_cost_shape_mismatch(small_scenario, small_channel, cost_params):
    solution = _solution(0.1)

    with pytest.raises(InvalidArgumentError):
        total_cost(solution, small_scenario, small_channel, cost_params)


def test_cost_matrices_agree_with_device_costs(small_evaluator, small_scenario):
    devices = small_scenario.num_devices
    power = small_scenario.max_tx_powers / 2
    rb = np.arange(devices)
    server = np.arange(devices) % 2
    theta = np.full(devices, 0.3)

    costs = small_evaluator.device_costs(power, rb, server, theta)
    rb_matrix = small_evaluator.rb_cost_matrix(power, server, theta)
    server_matrix = small_evaluator.server_cost_matrix(power, rb, theta)

    for d in range(devices):
        assert rb_matrix[d, rb[d]] == pytest.approx(costs[d], rel=1e-12)
        assert server_matrix[d, server[d]] == pytest.approx(costs[d], rel=1e-12)
        assert small_evaluator.single_device_cost(d, rb[d], server[d], power[d], theta[d]) \
            == pytest.approx(costs[d], rel=1e-12)


def test_local_compute_raises_cost(small_scenario, small_channel):
    devices = small_scenario.num_devices
    args = (small_scenario.max_tx_powers, np.arange(devices), np.arange(devices) % 2, np.full(devices, 0.1))

    plain = CostEvaluator(small_scenario, small_channel, CostParams()).device_costs(*args)
    coupled = CostEvaluator(small_scenario, small_channel, CostParams(include_local_compute=True)).device_costs(*args)

    assert np.all(coupled > plain)


def _covering_solution(scenario, theta=0.3):
    devices = scenario.num_devices
    return AllocationSolution.from_indices(
        scenario.max_tx_powers / 2, np.arange(devices), np.arange(devices) % scenario.num_servers,
        np.full(devices, theta), scenario.num_resource_blocks, scenario.num_servers)


def test_cost_strictly_increasing_in_theta():
    params = CostParams()
    scenario, channel = _single(150.0)
    thetas = np.linspace(params.theta_min, params.theta_max, 50)

    costs = [total_cost(_solution(0.1, theta), scenario, channel, params).total_cost for theta in thetas]

    assert all(b > a for a, b in zip(costs, costs[1:]))


def test_total_cost_is_additive_over_devices(small_scenario, small_channel, cost_params):
    solution = _covering_solution(small_scenario)
    full = total_cost(solution, small_scenario, small_channel, cost_params)

    for d in range(small_scenario.num_devices):
        rb, server = solution.rb_of_device(), solution.server_of_device()
        rb[d] = server[d] = -1
        without = total_cost(AllocationSolution.from_indices(
            solution.power, rb, server, solution.theta, small_scenario.num_resource_blocks,
            small_scenario.num_servers), small_scenario, small_channel, cost_params)

        assert without.served_cost == pytest.approx(full.total_cost - full.devices[d].cost, rel=1e-12)
        for other in range(small_scenario.num_devices):
            if other != d:
                assert without.devices[other].cost == full.devices[other].cost


def test_doubling_upload_size_doubles_latency_energy_and_cost(small_scenario, small_channel):
    solution = _covering_solution(small_scenario)

    single = total_cost(solution, small_scenario, small_channel, CostParams(upload_size=1e5))
    double = total_cost(solution, small_scenario, small_channel, CostParams(upload_size=2e5))

    for a, b in zip(single.devices, double.devices):
        assert b.latency_trans == pytest.approx(2 * a.latency_trans, rel=1e-12)
        assert b.energy_trans == pytest.approx(2 * a.energy_trans, rel=1e-12)
        assert b.cost == pytest.approx(2 * a.cost, rel=1e-12)
    assert double.total_cost == pytest.approx(2 * single.total_cost, rel=1e-12)
