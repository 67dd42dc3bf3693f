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

import itertools
import math
from typing import TYPE_CHECKING, Iterator, Optional, Sequence, Tuple

import numpy as np

from dsfl_sim.allocation import UNASSIGNED, AllocationSolution
from dsfl_sim.channel import compute_channel
from dsfl_sim.cost_model import CostEvaluator, CostParams
from dsfl_sim.errors import InstanceTooLargeError
from dsfl_sim.utils.log import Logger
from dsfl_sim.utils.messages import Messages

if TYPE_CHECKING:
    from dsfl_sim.channel import ChannelState
    from dsfl_sim.scenario import Scenario

logger = Logger(__name__)

MAX_DEVICES = 4
MAX_RESOURCE_BLOCKS = 3
MAX_SERVERS = 2
MAX_GRID_LEVELS = 16


def power_grid(p_max: float, levels: int) -> np.ndarray:
    """``levels`` evenly spaced powers in (0, p_max]."""
    return np.linspace(p_max / levels, p_max, levels)


def _check_size(scenario: Scenario, grid: Sequence[float]):
    limits = (("devices", scenario.num_devices, MAX_DEVICES),
              ("resource blocks", scenario.num_resource_blocks, MAX_RESOURCE_BLOCKS),
              ("servers", scenario.num_servers, MAX_SERVERS),
              ("power levels", len(grid), MAX_GRID_LEVELS))
    for name, value, limit in limits:
        if value > limit:
            raise InstanceTooLargeError(Messages.get_formatted("BruteForce.TooLarge", name, value, limit))


def _rb_maps(devices: int, resource_blocks: int) -> Iterator[Tuple[int, ...]]:
    for rb in itertools.product(range(UNASSIGNED, resource_blocks), repeat=devices):
        used = [r for r in rb if r != UNASSIGNED]
        if len(used) == len(set(used)):
            yield rb


def _assoc_maps(devices: int, capacities: np.ndarray) -> Iterator[Tuple[int, ...]]:
    for server in itertools.product(range(UNASSIGNED, len(capacities)), repeat=devices):
        load = np.bincount([s for s in server if s != UNASSIGNED], minlength=len(capacities))
        if (load <= capacities).all():
            yield server


def brute_force(scenario: Scenario, grid: Sequence[float], params: Optional[CostParams] = None,
                channel: Optional[ChannelState] = None) -> AllocationSolution:
    """
    Global optimum over every feasible resource block map, association, theta in {theta_min, theta_max} and
    transmit power in ``grid`` (levels above a device's maximum power are skipped for that device). Devices are
    decoupled once blocks and servers are fixed, so each (device, block, server) triple is priced once.
    """
    params = params if params is not None else CostParams()
    params.validate()
    _check_size(scenario, grid)
    channel = channel if channel is not None else compute_channel(scenario)
    evaluator = CostEvaluator(scenario, channel, params)

    d_count, r_count, s_count = scenario.num_devices, scenario.num_resource_blocks, scenario.num_servers
    thetas = np.array([params.theta_min, params.theta_max])
    levels = np.asarray(grid, dtype=float)

    best_cost = np.full((d_count, max(r_count, 1), max(s_count, 1)), math.inf)
    best_power = np.zeros_like(best_cost)
    best_theta = np.full_like(best_cost, params.theta_min)
    for d in range(d_count):
        powers = levels[(levels > 0) & (levels <= scenario.max_tx_powers[d] * (1 + 1e-12))]
        if len(powers) == 0:
            continue
        p_mesh, t_mesh = np.meshgrid(powers, thetas, indexing="ij")
        for r in range(r_count):
            for s in range(s_count):
                costs = evaluator.single_device_cost(d, r, s, p_mesh.ravel(), t_mesh.ravel())
                i = int(np.argmin(costs))
                best_cost[d, r, s] = costs[i]
                best_power[d, r, s] = p_mesh.ravel()[i]
                best_theta[d, r, s] = t_mesh.ravel()[i]

    incumbent: Tuple[int, float] = (d_count + 1, math.inf)
    choice: Tuple[Tuple[int, ...], Tuple[int, ...]] = ((UNASSIGNED,) * d_count, (UNASSIGNED,) * d_count)
    server_maps = list(_assoc_maps(d_count, scenario.capacities))
    for rb in _rb_maps(d_count, r_count):
        for server in server_maps:
            unserved = 0
            total = 0.0
            for d in range(d_count):
                c = best_cost[d, rb[d], server[d]] if rb[d] != UNASSIGNED and server[d] != UNASSIGNED else math.inf
                if math.isfinite(c):
                    total += c
                else:
                    unserved += 1
            if unserved < incumbent[0] or (unserved == incumbent[0] and total < incumbent[1]):
                incumbent = (unserved, total)
                choice = (rb, server)

    rb, server = (np.array(c, dtype=int) for c in choice)
    power = np.zeros(d_count)
    theta = np.full(d_count, params.theta_min)
    for d in range(d_count):
        if rb[d] != UNASSIGNED and server[d] != UNASSIGNED:
            power[d] = best_power[d, rb[d], server[d]]
            theta[d] = best_theta[d, rb[d], server[d]]
    solution = AllocationSolution.from_indices(power, rb, server, theta, r_count, s_count)
    logger.debug("BruteForce.Optimum", incumbent[1], incumbent[0])
    return solution
