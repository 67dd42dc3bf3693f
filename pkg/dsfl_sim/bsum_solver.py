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
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from dsfl_sim.allocation import (UNASSIGNED, AllocationSolution, Block,
                                 SolverTrace)
from dsfl_sim.assignment import capacitated_assignment, one_to_one_assignment
from dsfl_sim.channel import compute_channel
from dsfl_sim.cost_model import CostEvaluator, CostParams
from dsfl_sim.errors import InfeasibleAllocationError, InvalidConfigError
from dsfl_sim.utils.log import Logger
from dsfl_sim.utils.messages import Messages
from dsfl_sim.utils.properties import Properties, SimProperties
from dsfl_sim.utils.telemetry.null_telemetry import NullTelemetryFactory
from dsfl_sim.utils.telemetry.telemetry import (TelemetryConst,
                                                TelemetryTraceLevel)
from dsfl_sim.utils.utils import SeedUtils

if TYPE_CHECKING:
    from dsfl_sim.channel import ChannelState
    from dsfl_sim.scenario import Scenario
    from dsfl_sim.utils.telemetry.telemetry import TelemetryFactory

logger = Logger(__name__)

DESCENT_SLACK = 1e-12
# below this relative gain a block keeps its current value, which makes repeated updates idempotent
IMPROVEMENT_EPS = 1e-12

Objective = Tuple[int, float]


@dataclass(frozen=True)
class SolverParams:
    cost: CostParams = field(default_factory=CostParams)
    tolerance: float = 1e-4
    max_iterations: int = 200
    restarts: int = 4
    require_full_coverage: bool = False
    max_workers: int = 1

    def validate(self):
        self.cost.validate()
        if not self.tolerance > 0:
            raise InvalidConfigError(
                Messages.get_formatted("SolverParams.NotPositive", "tolerance", self.tolerance), key="tolerance")
        if self.max_iterations < 1:
            raise InvalidConfigError(
                Messages.get_formatted("SolverParams.NotPositive", "max_iterations", self.max_iterations),
                key="max_iterations")
        if self.restarts < 1:
            raise InvalidConfigError(
                Messages.get_formatted("SolverParams.NotPositive", "restarts", self.restarts), key="restarts")

    @staticmethod
    def from_properties(solver_props: Properties, cost_props: Properties) -> SolverParams:
        return SolverParams(
            cost=CostParams.from_properties(cost_props),
            tolerance=SimProperties.TOLERANCE.get_float(solver_props),
            max_iterations=SimProperties.MAX_ITERATIONS.get_int(solver_props),
            restarts=SimProperties.RESTARTS.get_int(solver_props),
            require_full_coverage=SimProperties.REQUIRE_FULL_COVERAGE.get_bool(solver_props),
            max_workers=SimProperties.SOLVER_MAX_WORKERS.get_int(solver_props))


def objective(evaluator: CostEvaluator, solution: AllocationSolution) -> Objective:
    """(unserved devices, cost of served devices), compared lexicographically."""
    costs = evaluator.device_costs(solution.power, solution.rb_of_device(), solution.server_of_device(),
                                   solution.theta)
    finite = np.isfinite(costs)
    return int((~finite).sum()), math.fsum(float(c) for c in costs[finite])


def _not_worse(candidate: Objective, current: Objective) -> bool:
    if candidate[0] != current[0]:
        return candidate[0] < current[0]
    return candidate[1] <= current[1] + DESCENT_SLACK


class BlockUpdater(ABC):
    """
    One block of the BSUM cycle. ``update`` minimizes the cost over its own variables with every other block
    frozen and never returns a solution with a higher objective than the one it received.
    """

    @property
    @abstractmethod
    def block(self) -> Block:
        pass

    @abstractmethod
    def propose(self, solution: AllocationSolution, evaluator: CostEvaluator,
                params: SolverParams) -> AllocationSolution:
        pass

    def update(self, solution: AllocationSolution, evaluator: CostEvaluator,
               params: SolverParams) -> AllocationSolution:
        candidate = self.propose(solution, evaluator, params)
        if _not_worse(objective(evaluator, candidate), objective(evaluator, solution)):
            return candidate
        logger.debug("BlockUpdater.Rejected", self.block.value)
        return solution


class AssociationBlockUpdater(BlockUpdater):
    @property
    def block(self) -> Block:
        return Block.ASSOC

    def propose(self, solution, evaluator, params):
        cost = evaluator.server_cost_matrix(solution.power, solution.rb_of_device(), solution.theta)
        server = capacitated_assignment(cost, evaluator.scenario.capacities)
        return solution.with_updates(server=server)


class ResourceBlockUpdater(BlockUpdater):
    @property
    def block(self) -> Block:
        return Block.RB

    def propose(self, solution, evaluator, params):
        cost = evaluator.rb_cost_matrix(solution.power, solution.server_of_device(), solution.theta)
        return solution.with_updates(rb=one_to_one_assignment(cost))


class PowerBlockUpdater(BlockUpdater):
    @property
    def block(self) -> Block:
        return Block.POWER

    @staticmethod
    def best_power(evaluator: CostEvaluator, device: int, rb: int, server: int, theta: float,
                   current: float, p_min: float, p_max: float) -> float:
        """
        Minimizes the quasi-convex per-device cost over [p_min, p_max] with a bounded golden-section/parabolic
        search in log-power, then keeps the best of the search result, both ends and the current power.
        """
        def cost_at(p: float) -> float:
            return float(evaluator.single_device_cost(device, rb, server, p, theta))

        lower = min(p_min, p_max)
        result = minimize_scalar(lambda x: cost_at(math.exp(x)), bounds=(math.log(lower), math.log(p_max)),
                                 method="bounded", options={"xatol": 1e-10})
        current = min(max(current, lower), p_max)
        best_p, best_cost = current, cost_at(current)
        for p in (float(math.exp(result.x)), p_max, lower):
            p = min(max(p, lower), p_max)
            c = cost_at(p)
            if c < best_cost - IMPROVEMENT_EPS * abs(best_cost):
                best_p, best_cost = p, c
        return best_p

    def propose(self, solution, evaluator, params):
        rb = solution.rb_of_device()
        server = solution.server_of_device()
        p_max = evaluator.scenario.max_tx_powers
        served = [d for d in range(solution.num_devices) if rb[d] != UNASSIGNED and server[d] != UNASSIGNED]

        def search(d: int) -> float:
            return self.best_power(evaluator, d, int(rb[d]), int(server[d]), float(solution.theta[d]),
                                   float(solution.power[d]), params.cost.p_min, float(p_max[d]))

        if params.max_workers > 1 and len(served) > 1:
            with ThreadPoolExecutor(max_workers=params.max_workers, thread_name_prefix="PowerBlockExecutor") as ex:
                found = list(ex.map(search, served))
        else:
            found = [search(d) for d in served]

        power = solution.power.copy()
        # written back in device-id order whatever the scheduling
        for d, p in zip(served, found):
            power[d] = p
        return solution.with_updates(power=power)


class ThetaBlockUpdater(BlockUpdater):
    @property
    def block(self) -> Block:
        return Block.THETA

    @staticmethod
    def candidates(params: CostParams) -> np.ndarray:
        """
        theta_min, theta_max and the left end of every interval on which the iteration count is constant.
        The cost increases with theta inside such an interval, so its minimum over [theta_min, theta_max]
        lies on one of these points.
        """
        a = params.iteration_coeff
        k_low = int(math.ceil(a * math.log(1.0 / params.theta_max)))
        k_high = int(math.ceil(a * math.log(1.0 / params.theta_min)))
        points = [params.theta_min, params.theta_max]
        for k in range(max(k_low - 1, 0), k_high + 1):
            theta = math.exp(-k / a) * (1.0 + 1e-9)
            if params.theta_min <= theta <= params.theta_max:
                points.append(theta)
        return np.unique(np.array(points, dtype=float))

    def propose(self, solution, evaluator, params):
        cost_params = params.cost
        if not cost_params.include_local_compute:
            return solution.with_updates(theta=np.full(solution.num_devices, cost_params.theta_min))

        rb = solution.rb_of_device()
        server = solution.server_of_device()
        grid = self.candidates(cost_params)
        theta = solution.theta.copy()
        for d in range(solution.num_devices):
            if rb[d] == UNASSIGNED or server[d] == UNASSIGNED:
                continue
            current = float(np.clip(theta[d], cost_params.theta_min, cost_params.theta_max))
            costs = evaluator.single_device_cost(d, int(rb[d]), int(server[d]), solution.power[d], grid)
            best = int(np.argmin(costs))
            current_cost = float(evaluator.single_device_cost(d, int(rb[d]), int(server[d]), solution.power[d],
                                                               current))
            if costs[best] < current_cost - IMPROVEMENT_EPS * abs(current_cost):
                theta[d] = grid[best]
            else:
                theta[d] = current
        return solution.with_updates(theta=theta)


DEFAULT_BLOCK_ORDER: Tuple[Block, ...] = (Block.ASSOC, Block.RB, Block.POWER, Block.THETA)

_UPDATERS = {
    Block.ASSOC: AssociationBlockUpdater,
    Block.RB: ResourceBlockUpdater,
    Block.POWER: PowerBlockUpdater,
    Block.THETA: ThetaBlockUpdater,
}


def block_pipeline(frozen: Sequence[Block] = ()) -> List[BlockUpdater]:
    return [_UPDATERS[block]() for block in DEFAULT_BLOCK_ORDER if block not in frozen]


class BsumSolver:
    """Cycles the block updaters until a full cycle improves the cost by less than the relative tolerance."""

    def __init__(self, evaluator: CostEvaluator, params: SolverParams, updaters: Sequence[BlockUpdater]):
        self._evaluator = evaluator
        self._params = params
        self._updaters = list(updaters)

    def run(self, initial: AllocationSolution) -> Tuple[AllocationSolution, SolverTrace]:
        solution = initial
        trace = SolverTrace()
        current = objective(self._evaluator, solution)
        trace.record(0, Block.INIT, current[1], current[0])

        for iteration in range(1, self._params.max_iterations + 1):
            start = current
            for updater in self._updaters:
                solution = updater.update(solution, self._evaluator, self._params)
                current = objective(self._evaluator, solution)
                trace.record(iteration, updater.block, current[1], current[0])
                logger.debug("BsumSolver.BlockUpdated", updater.block.value, iteration, current[1], current[0])
            trace.iterations_used = iteration

            if current[0] < start[0]:
                continue
            scale = abs(start[1])
            improvement = (start[1] - current[1]) / scale if scale > 0 else 0.0
            if improvement < self._params.tolerance:
                trace.converged = True
                break

        if trace.converged:
            logger.debug("BsumSolver.Converged", trace.iterations_used, current[1])
        else:
            logger.info("BsumSolver.IterationCap", self._params.max_iterations, current[1])
        return solution, trace


def initial_solution(scenario: Scenario, evaluator: CostEvaluator, params: SolverParams,
                     rng: Optional[np.random.Generator] = None) -> AllocationSolution:
    """
    Starting point of a BSUM run: maximum power, theta_max, and a full-coverage-maximizing association and
    resource block assignment. Without ``rng`` servers follow geometry (closest under capacity) and blocks the
    cheapest matching for those servers; with ``rng`` both are drawn at random.
    """
    d, r = scenario.num_devices, scenario.num_resource_blocks
    power = scenario.max_tx_powers.copy()
    theta = np.full(d, params.cost.theta_max)

    if rng is None:
        distance = np.linalg.norm(scenario.device_positions[:, None, :] - scenario.server_positions[None, :, :],
                                  axis=2)
        server = capacitated_assignment(distance, scenario.capacities)
        rb = one_to_one_assignment(evaluator.rb_cost_matrix(power, server, theta))
    else:
        order = rng.permutation(d)
        server = random_capacitated_association(scenario, rng, order)
        rb = np.full(d, UNASSIGNED, dtype=int)
        blocks = rng.permutation(r)
        served = [dev for dev in order if server[dev] != UNASSIGNED]
        for dev, block in zip(served, blocks):
            rb[dev] = block
    return AllocationSolution.from_indices(power, rb, server, theta, r, scenario.num_servers)


def random_capacitated_association(scenario: Scenario, rng: np.random.Generator,
                                   order: Optional[np.ndarray] = None) -> np.ndarray:
    """Uniformly random capacity-respecting association; devices beyond the total capacity stay unassigned."""
    d = scenario.num_devices
    order = rng.permutation(d) if order is None else order
    slots = rng.permutation(np.repeat(np.arange(scenario.num_servers), np.minimum(scenario.capacities, d)))
    server = np.full(d, UNASSIGNED, dtype=int)
    for dev, slot in zip(order, slots):
        server[dev] = slot
    return server


def random_rb_assignment(scenario: Scenario, rng: np.random.Generator) -> np.ndarray:
    """Uniformly random one-to-one resource block assignment."""
    d, r = scenario.num_devices, scenario.num_resource_blocks
    rb = np.full(d, UNASSIGNED, dtype=int)
    for dev, block in zip(rng.permutation(d), rng.permutation(r)):
        rb[dev] = block
    return rb


class _SolveContext:
    def __init__(self, scenario: Scenario, params: SolverParams, channel: Optional[ChannelState],
                 telemetry_factory: Optional[TelemetryFactory]):
        params.validate()
        self.scenario = scenario
        self.params = params
        self.channel = channel if channel is not None else compute_channel(scenario)
        self.evaluator = CostEvaluator(scenario, self.channel, params.cost)
        self.telemetry = telemetry_factory if telemetry_factory is not None else NullTelemetryFactory()


def _finish(ctx: _SolveContext, name: str, solution: AllocationSolution,
            trace: SolverTrace) -> Tuple[AllocationSolution, SolverTrace]:
    if not solution.feasible:
        logger.warning("Solver.Infeasible", name, list(solution.uncovered_devices))
        if ctx.params.require_full_coverage:
            raise InfeasibleAllocationError(
                Messages.get_formatted("Solver.InfeasibleCoverage", name, list(solution.uncovered_devices)),
                solution.uncovered_devices)
    return solution.with_idle_unserved(), trace


def _run(ctx: _SolveContext, name: str, frozen: Sequence[Block], starts: Sequence[AllocationSolution]) \
        -> Tuple[AllocationSolution, SolverTrace]:
    counter = ctx.telemetry.create_counter(TelemetryConst.BLOCK_UPDATES_COUNTER)
    with ctx.telemetry.open_telemetry_context(TelemetryConst.run_trace(name), TelemetryTraceLevel.TOP_LEVEL) as context:
        solver = BsumSolver(ctx.evaluator, ctx.params, block_pipeline(frozen))
        best: Optional[Tuple[AllocationSolution, SolverTrace]] = None
        best_objective: Objective = (ctx.scenario.num_devices + 1, math.inf)
        for start in starts:
            solution, trace = solver.run(start)
            counter.add(len(trace.entries) - 1)
            value = objective(ctx.evaluator, solution)
            if best is None or value[0] < best_objective[0] \
                    or (value[0] == best_objective[0] and value[1] < best_objective[1] - DESCENT_SLACK):
                best, best_objective = (solution, trace), value
        assert best is not None
        context.set_attribute(TelemetryConst.FINAL_COST, best_objective[1])
        context.set_attribute(TelemetryConst.UNSERVED_DEVICES, best_objective[0])
    return _finish(ctx, name, best[0], best[1])


def solve(scenario: Scenario, params: SolverParams, seed: int = 0, initial: Optional[AllocationSolution] = None,
          channel: Optional[ChannelState] = None, telemetry_factory: Optional[TelemetryFactory] = None) \
        -> Tuple[AllocationSolution, SolverTrace]:
    """
    Jointly minimizes the total cost over association, resource blocks, power and theta by cycling exact block
    minimizers. With ``initial`` a single warm-started run is made; otherwise a geometric start plus
    ``restarts - 1`` seeded random starts, keeping the best.
    """
    ctx = _SolveContext(scenario, params, channel, telemetry_factory)
    if initial is not None:
        initial.check_shape(scenario)
        # unserved devices come back with zero power; they need a positive one to be picked up again
        idle = np.zeros(scenario.num_devices, dtype=bool)
        idle[list(initial.uncovered_devices)] = True
        starts = [initial.with_updates(power=np.where(idle, scenario.max_tx_powers, initial.power))]
    else:
        starts = [initial_solution(scenario, ctx.evaluator, params)]
        starts += [initial_solution(scenario, ctx.evaluator, params, SeedUtils.generator(seed, k))
                   for k in range(1, params.restarts)]
    return _run(ctx, "solve", (), starts)


def baseline_a(scenario: Scenario, params: SolverParams, seed: int = 0, channel: Optional[ChannelState] = None,
               telemetry_factory: Optional[TelemetryFactory] = None,
               rb: Optional[np.ndarray] = None) -> Tuple[AllocationSolution, SolverTrace]:
    """Random resource allocation, frozen; BSUM over association, power and theta."""
    ctx = _SolveContext(scenario, params, channel, telemetry_factory)
    rb = random_rb_assignment(scenario, SeedUtils.generator(seed)) if rb is None else np.asarray(rb, dtype=int)
    start = initial_solution(scenario, ctx.evaluator, params).with_updates(rb=rb)
    return _run(ctx, "baseline_a", (Block.RB,), [start])


def baseline_r(scenario: Scenario, params: SolverParams, seed: int = 0, channel: Optional[ChannelState] = None,
               telemetry_factory: Optional[TelemetryFactory] = None) -> Tuple[AllocationSolution, SolverTrace]:
    """Random capacity-respecting association, frozen; BSUM over resource blocks, power and theta."""
    ctx = _SolveContext(scenario, params, channel, telemetry_factory)
    server = random_capacitated_association(scenario, SeedUtils.generator(seed))
    start = initial_solution(scenario, ctx.evaluator, params).with_updates(server=server)
    return _run(ctx, "baseline_r", (Block.ASSOC,), [start])


def update_power_block(solution: AllocationSolution, scenario: Scenario, params: SolverParams,
                       channel: Optional[ChannelState] = None) -> AllocationSolution:
    return _single_block(PowerBlockUpdater(), solution, scenario, params, channel)


def update_rb_block(solution: AllocationSolution, scenario: Scenario, params: SolverParams,
                    channel: Optional[ChannelState] = None) -> AllocationSolution:
    return _single_block(ResourceBlockUpdater(), solution, scenario, params, channel)


def update_association_block(solution: AllocationSolution, scenario: Scenario, params: SolverParams,
                             channel: Optional[ChannelState] = None) -> AllocationSolution:
    updated = _single_block(AssociationBlockUpdater(), solution, scenario, params, channel)
    if params.require_full_coverage and int(scenario.capacities.sum()) < scenario.num_devices:
        raise InfeasibleAllocationError(
            Messages.get_formatted("Solver.InsufficientCapacity", int(scenario.capacities.sum()),
                                   scenario.num_devices),
            tuple(int(d) for d in np.flatnonzero(updated.server_of_device() == UNASSIGNED)))
    return updated


def update_theta_block(solution: AllocationSolution, scenario: Scenario, params: SolverParams,
                       channel: Optional[ChannelState] = None) -> AllocationSolution:
    return _single_block(ThetaBlockUpdater(), solution, scenario, params, channel)


def _single_block(updater: BlockUpdater, solution: AllocationSolution, scenario: Scenario, params: SolverParams,
                  channel: Optional[ChannelState]) -> AllocationSolution:
    solution.check_shape(scenario)
    channel = channel if channel is not None else compute_channel(scenario)
    return updater.update(solution, CostEvaluator(scenario, channel, params.cost), params)
