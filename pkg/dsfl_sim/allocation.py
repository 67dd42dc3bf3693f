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

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Dict, List, Optional, Tuple

import numpy as np

from dsfl_sim.errors import InvalidArgumentError
from dsfl_sim.utils.messages import Messages

if TYPE_CHECKING:
    from dsfl_sim.cost_model import CostParams
    from dsfl_sim.scenario import Scenario

UNASSIGNED = -1


class Block(Enum):
    INIT = "init"
    ASSOC = "assoc"
    RB = "rb"
    POWER = "power"
    THETA = "theta"


@dataclass(eq=False)
class AllocationSolution:
    """
    power: watts per device.
    rb_assign: device x resource block 0/1 matrix.
    assoc: device x server 0/1 matrix.
    theta: relative local accuracy per device.
    """
    power: np.ndarray
    rb_assign: np.ndarray
    assoc: np.ndarray
    theta: np.ndarray
    feasible: bool = True
    uncovered_devices: Tuple[int, ...] = ()

    @staticmethod
    def from_indices(power: np.ndarray, rb: np.ndarray, server: np.ndarray, theta: np.ndarray,
                     num_resource_blocks: int, num_servers: int) -> AllocationSolution:
        devices = len(power)
        rb_assign = np.zeros((devices, num_resource_blocks), dtype=np.int8)
        assoc = np.zeros((devices, num_servers), dtype=np.int8)
        for d in range(devices):
            if rb[d] >= 0:
                rb_assign[d, rb[d]] = 1
            if server[d] >= 0:
                assoc[d, server[d]] = 1
        uncovered = tuple(int(d) for d in range(devices) if rb[d] < 0 or server[d] < 0)
        return AllocationSolution(np.asarray(power, dtype=float).copy(), rb_assign, assoc,
                                  np.asarray(theta, dtype=float).copy(), len(uncovered) == 0, uncovered)

    @property
    def num_devices(self) -> int:
        return len(self.power)

    def rb_of_device(self) -> np.ndarray:
        return np.where(self.rb_assign.any(axis=1), self.rb_assign.argmax(axis=1), UNASSIGNED)

    def server_of_device(self) -> np.ndarray:
        return np.where(self.assoc.any(axis=1), self.assoc.argmax(axis=1), UNASSIGNED)

    def copy(self) -> AllocationSolution:
        return AllocationSolution(self.power.copy(), self.rb_assign.copy(), self.assoc.copy(), self.theta.copy(),
                                  self.feasible, self.uncovered_devices)

    def with_idle_unserved(self) -> AllocationSolution:
        """Same allocation with zero transmit power for every device lacking a server or resource block."""
        power = self.power.copy()
        power[list(self.uncovered_devices)] = 0.0
        return AllocationSolution(power, self.rb_assign.copy(), self.assoc.copy(), self.theta.copy(),
                                  self.feasible, self.uncovered_devices)

    def with_updates(self, power: Optional[np.ndarray] = None, rb: Optional[np.ndarray] = None,
                     server: Optional[np.ndarray] = None, theta: Optional[np.ndarray] = None) -> AllocationSolution:
        return AllocationSolution.from_indices(
            self.power if power is None else power,
            self.rb_of_device() if rb is None else rb,
            self.server_of_device() if server is None else server,
            self.theta if theta is None else theta,
            self.rb_assign.shape[1], self.assoc.shape[1])

    def check_shape(self, scenario: Scenario):
        d, r, s = scenario.num_devices, scenario.num_resource_blocks, scenario.num_servers
        expected = {"power": (d,), "theta": (d,), "rb_assign": (d, r), "assoc": (d, s)}
        for name, shape in expected.items():
            actual = getattr(self, name).shape
            if actual != shape:
                raise InvalidArgumentError(
                    Messages.get_formatted("AllocationSolution.ShapeMismatch", name, actual, shape))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AllocationSolution):
            return False
        return np.array_equal(self.power, other.power) and np.array_equal(self.rb_assign, other.rb_assign) \
            and np.array_equal(self.assoc, other.assoc) and np.array_equal(self.theta, other.theta) \
            and self.feasible == other.feasible

    def to_rows(self) -> List[Tuple[int, int, int, float, float]]:
        rb = self.rb_of_device()
        server = self.server_of_device()
        return [(d, int(server[d]), int(rb[d]), float(self.power[d]), float(self.theta[d]))
                for d in range(self.num_devices)]


def check_feasibility(solution: AllocationSolution, scenario: Scenario, params: CostParams,
                      tolerance: float = 1e-12) -> List[str]:
    """Returns every violated constraint as a readable message; an empty list means the solution is valid."""
    solution.check_shape(scenario)
    violations: List[str] = []
    for name, matrix in (("rb_assign", solution.rb_assign), ("assoc", solution.assoc)):
        if not np.isin(matrix, (0, 1)).all():
            violations.append(Messages.get_formatted("Feasibility.NotBinary", name))
    for d in np.flatnonzero(solution.rb_assign.sum(axis=1) > 1):
        violations.append(Messages.get_formatted("Feasibility.DeviceRbRow", int(d)))
    for r in np.flatnonzero(solution.rb_assign.sum(axis=0) > 1):
        violations.append(Messages.get_formatted("Feasibility.RbShared", int(r)))
    for d in np.flatnonzero(solution.assoc.sum(axis=1) > 1):
        violations.append(Messages.get_formatted("Feasibility.DeviceAssocRow", int(d)))
    load = solution.assoc.sum(axis=0)
    for s in np.flatnonzero(load > scenario.capacities):
        violations.append(Messages.get_formatted("Feasibility.Capacity", int(s), int(load[s]),
                                                 int(scenario.capacities[s])))
    for d in np.flatnonzero((solution.power < -tolerance) | (solution.power > scenario.max_tx_powers + tolerance)):
        violations.append(Messages.get_formatted("Feasibility.Power", int(d), float(solution.power[d])))
    for d in np.flatnonzero((solution.theta < params.theta_min - tolerance)
                            | (solution.theta > params.theta_max + tolerance)):
        violations.append(Messages.get_formatted("Feasibility.Theta", int(d), float(solution.theta[d])))
    return violations


@dataclass(frozen=True)
class TraceEntry:
    iteration: int
    update: int
    block: Block
    total_cost: float
    unserved: int


@dataclass
class SolverTrace:
    """
    ``iteration`` counts full block cycles (0 is the starting point); ``update`` counts single block updates.
    Entries hold the cost of served devices next to the number of unserved devices. The exported cost of an
    entry is that served cost once the unserved count has reached its final value and ``inf`` before, which
    keeps the exported sequence nonincreasing under the (unserved, cost) ordering the solver descends on.
    """
    entries: List[TraceEntry] = field(default_factory=list)
    converged: bool = False
    iterations_used: int = 0

    def record(self, iteration: int, block: Block, total_cost: float, unserved: int):
        self.entries.append(TraceEntry(iteration, len(self.entries), block, total_cost, unserved))

    @property
    def final_cost(self) -> float:
        return self.entries[-1].total_cost if self.entries else math.inf

    @property
    def final_unserved(self) -> int:
        return self.entries[-1].unserved if self.entries else 0

    def _exported(self, entry: TraceEntry) -> float:
        return entry.total_cost if entry.unserved <= self.final_unserved else math.inf

    def costs(self) -> List[float]:
        return [self._exported(e) for e in self.entries]

    def cycle_entries(self) -> List[TraceEntry]:
        """Last entry of every full cycle, starting with the initial point."""
        last: Dict[int, TraceEntry] = {}
        for entry in self.entries:
            last[entry.iteration] = entry
        return [last[i] for i in sorted(last)]

    def cycle_costs(self) -> List[float]:
        return [self._exported(e) for e in self.cycle_entries()]

    def to_rows(self) -> List[Tuple[int, int, str, float, int]]:
        return [(e.iteration, e.update, e.block.value, self._exported(e), e.unserved) for e in self.entries]
