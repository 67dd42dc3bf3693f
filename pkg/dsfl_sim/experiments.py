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

from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import (TYPE_CHECKING, Callable, Dict, List, Optional, Sequence,
                    Tuple, TypeVar)

import numpy as np

from dsfl_sim.allocation import check_feasibility
from dsfl_sim.bsum_solver import baseline_a, baseline_r, solve
from dsfl_sim.channel import achievable_rate, compute_channel, sinr
from dsfl_sim.config import training_hyper, write_resolved
from dsfl_sim.cost_model import (device_cost, total_cost, transmission_energy,
                                 transmission_latency)
from dsfl_sim.csv_export import write_csv
from dsfl_sim.dataset import load_mnist, shard_iid, shard_non_iid
from dsfl_sim.dsfl_engine import association_from_solution, run_dsfl, run_sfl
from dsfl_sim.errors import InvalidConfigError
from dsfl_sim.scenario import (Device, EdgeServer, ResourceBlock, Scenario,
                               generate_scenario)
from dsfl_sim.utils.log import Logger
from dsfl_sim.utils.messages import Messages
from dsfl_sim.utils.telemetry.default_telemetry_factory import \
    DefaultTelemetryFactory
from dsfl_sim.utils.units import linear_to_db, watts_to_dbm

if TYPE_CHECKING:
    from pathlib import Path

    from dsfl_sim.allocation import AllocationSolution, SolverTrace
    from dsfl_sim.bsum_solver import SolverParams
    from dsfl_sim.config import ExperimentSpec
    from dsfl_sim.dataset import Dataset
    from dsfl_sim.dsfl_engine import RoundMetrics
    from dsfl_sim.utils.telemetry.telemetry import TelemetryFactory

logger = Logger(__name__)

SCHEMES = ("proposed", "baseline_a", "baseline_r")

COST_SURFACE_FILE = "cost_surface.csv"
SOLVER_COMPARE_FILE = "solver_compare.csv"
SOLVER_SUMMARY_FILE = "solver_compare_summary.csv"
TRAINING_CURVES_FILE = "training_curves.csv"
SWEEP_FILE = "sweep.csv"
ALLOCATION_FILE = "allocation.csv"
BREAKDOWN_FILE = "cost_breakdown.csv"
TRACE_FILE = "trace.csv"
SCENARIO_FILE = "scenario.toml"

Result = TypeVar("Result")
Solver = Callable[..., Tuple["AllocationSolution", "SolverTrace"]]


def _solver(scheme: str) -> Solver:
    return {"proposed": solve, "baseline_a": baseline_a, "baseline_r": baseline_r}[scheme]


def _run_all(tasks: Sequence[Tuple], work: Callable[..., Result], max_workers: int) -> List[Result]:
    """Runs independent tasks, optionally on a thread pool; results come back in task order."""
    if max_workers > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=max_workers, thread_name_prefix="ExperimentExecutor") as executor:
            return list(executor.map(lambda task: work(*task), tasks))
    return [work(*task) for task in tasks]


def _telemetry(spec: ExperimentSpec) -> TelemetryFactory:
    return DefaultTelemetryFactory(spec.telemetry)


def reference_scenario(spec: ExperimentSpec, distances: Sequence[float]) -> Scenario:
    """
    One device at the reference distance from one server, with one resource block per interferer distance:
    block ``r`` carries a cellular user ``distances[r]`` away from the server.
    """
    config = spec.scenario
    device = Device(0, (spec.surface.reference_distance, 0.0), config.device_max_tx_power, config.cpu_freq_min,
                    config.dataset_size)
    server = EdgeServer(0, (0.0, 0.0), 1)
    blocks = tuple(ResourceBlock(r, config.rb_bandwidth, (0.0, float(d)), config.cellular_tx_power)
                   for r, d in enumerate(distances))
    return Scenario(max(config.area_side, float(max(distances)), spec.surface.reference_distance), (device,),
                    (server,), blocks, config.carrier_freq, config.noise_psd, spec.scenario_seed)


def cost_surface_rows(spec: ExperimentSpec) -> List[Tuple[float, float, float]]:
    """Device cost over a (theta, SINR) grid; SINR is swept by moving the cellular interferer."""
    surface = spec.surface
    params = spec.solver.cost
    if surface.theta_points < 1 or surface.sinr_points < 1:
        raise InvalidConfigError(
            Messages.get_formatted("Experiments.EmptyGrid", surface.theta_points, surface.sinr_points),
            key="theta_points")
    thetas = np.linspace(params.theta_min, params.theta_max, surface.theta_points)
    distances = np.geomspace(surface.interferer_min_distance, surface.interferer_max_distance, surface.sinr_points)
    scenario = reference_scenario(spec, distances)
    channel = compute_channel(scenario)
    power = scenario.devices[0].max_tx_power

    rows = []
    for theta in thetas:
        for r in range(scenario.num_resource_blocks):
            ratio = sinr(0, r, 0, power, scenario, channel)
            rate = achievable_rate(ratio, scenario.resource_blocks[r].bandwidth)
            latency = transmission_latency(params.upload_size, float(rate))
            energy = transmission_energy(power, latency)
            rows.append((float(theta), float(linear_to_db(ratio)), device_cost(float(theta), latency, energy, params)))
    return rows


def run_cost_surface(spec: ExperimentSpec) -> List[Path]:
    rows = cost_surface_rows(spec)
    return [write_resolved(spec),
            write_csv(spec.output_dir / COST_SURFACE_FILE, ("theta", "sinr_db", "cost"), rows)]


def _solve_scheme(scheme: str, scenario: Scenario, params: SolverParams, seed: int,
                  telemetry: TelemetryFactory) -> Tuple[AllocationSolution, SolverTrace]:
    return _solver(scheme)(scenario, params, seed=seed, telemetry_factory=telemetry)


def solver_compare_runs(spec: ExperimentSpec) -> Dict[Tuple[str, int], SolverTrace]:
    telemetry = _telemetry(spec)
    scenarios = {seed: generate_scenario(spec.scenario, seed) for seed in spec.seeds}
    tasks = [(scheme, seed) for scheme in SCHEMES for seed in spec.seeds]

    def work(scheme: str, seed: int) -> SolverTrace:
        return _solve_scheme(scheme, scenarios[seed], spec.solver, seed, telemetry)[1]

    traces = _run_all(tasks, work, spec.max_workers)
    return dict(zip(tasks, traces))


def summarize(traces: Dict[Tuple[str, int], SolverTrace]) -> List[Tuple[str, int, float, float, float]]:
    rows = []
    for scheme in SCHEMES:
        runs = [trace for (s, _), trace in sorted(traces.items()) if s == scheme]
        if runs:
            finals = [trace.final_cost for trace in runs]
            unserved = [trace.final_unserved for trace in runs]
            rows.append((scheme, len(runs), float(np.mean(finals)), float(np.std(finals)), float(np.mean(unserved))))
    return rows


def run_solver_compare(spec: ExperimentSpec) -> List[Path]:
    """Proposed solver and both baselines on every seed: per-cycle traces plus a per-scheme summary."""
    traces = solver_compare_runs(spec)
    rows = []
    for scheme in SCHEMES:
        for seed in spec.seeds:
            trace = traces[(scheme, seed)]
            for iteration, (cost, entry) in enumerate(zip(trace.cycle_costs(), trace.cycle_entries())):
                rows.append((scheme, seed, iteration, cost, entry.unserved))
    return [write_resolved(spec),
            write_csv(spec.output_dir / SOLVER_COMPARE_FILE, ("scheme", "seed", "iteration", "cost", "unserved"), rows),
            write_csv(spec.output_dir / SOLVER_SUMMARY_FILE,
                      ("scheme", "seeds", "mean_final_cost", "std_final_cost", "mean_unserved"), summarize(traces))]


def training_association(spec: ExperimentSpec, seed: int, telemetry: Optional[TelemetryFactory] = None) \
        -> Dict[int, int]:
    """Device to edge map of the training devices, taken from an optimized allocation."""
    scenario = generate_scenario(
        replace(spec.scenario, num_devices=spec.training.num_devices, num_resource_blocks=max(
            spec.scenario.num_resource_blocks, spec.training.num_devices)), seed)
    solution, _ = solve(scenario, spec.solver, seed=seed, telemetry_factory=telemetry)
    return association_from_solution(solution, scenario)


def training_curve_rows(spec: ExperimentSpec, train: Dataset, test: Dataset) -> List[Tuple]:
    training = spec.training
    telemetry = _telemetry(spec)
    shard = shard_iid if training.iid else shard_non_iid
    tasks: List[Tuple[str, int, int]] = []
    for seed in spec.seeds:
        tasks.extend(("dsfl", k, seed) for k in training.edge_aggregations)
        tasks.append(("sfl", 0, seed))

    def work(protocol: str, k: int, seed: int) -> List[RoundMetrics]:
        shards = shard(train, training.num_shards, training.shard_size, training.num_devices, seed,
                       training.shards_per_device)
        if protocol == "sfl":
            return run_sfl(shards, training_hyper(spec, seed, 1), test, telemetry)
        association = training_association(spec, seed)
        return run_dsfl(association, shards, training_hyper(spec, seed, k), test, telemetry)

    results = _run_all(tasks, work, spec.max_workers)
    rows = []
    for (protocol, k, seed), metrics in zip(tasks, results):
        for m in metrics:
            rows.append((protocol, k if protocol == "dsfl" else "", seed, m.round, m.test_accuracy, m.train_loss,
                         m.edge_aggregations_performed, m.global_aggregations_performed, m.bits_uplinked))
    return rows


def run_training_curves(spec: ExperimentSpec, train: Optional[Dataset] = None,
                        test: Optional[Dataset] = None) -> List[Path]:
    """DSFL for every configured k and SFL, on shared seeds. MNIST is read from the data directory if not given."""
    train = train if train is not None else load_mnist(spec.training.data_dir or None, "train")
    test = test if test is not None else load_mnist(spec.training.data_dir or None, "test")
    rows = training_curve_rows(spec, train, test)
    header = ("protocol", "k", "seed", "round", "accuracy", "loss", "edge_aggs", "global_aggs", "bits_up")
    return [write_resolved(spec), write_csv(spec.output_dir / TRAINING_CURVES_FILE, header, rows)]


def sweep_rows(spec: ExperimentSpec) -> List[Tuple[str, int, str, int, float, int, int]]:
    """Final cost of every scheme and seed while one scenario count takes each configured value."""
    parameter = spec.sweep.parameter
    telemetry = _telemetry(spec)
    tasks = [(value, scheme, seed) for value in spec.sweep.values for scheme in SCHEMES for seed in spec.seeds]

    def work(value: int, scheme: str, seed: int) -> Tuple[float, int, int]:
        scenario = generate_scenario(replace(spec.scenario, **{parameter: value}), seed)
        _, trace = _solve_scheme(scheme, scenario, spec.solver, seed, telemetry)
        return trace.final_cost, trace.final_unserved, trace.iterations_used

    results = _run_all(tasks, work, spec.max_workers)
    return [(parameter, value, scheme, seed, cost, unserved, iterations)
            for (value, scheme, seed), (cost, unserved, iterations) in zip(tasks, results)]


def run_sweep(spec: ExperimentSpec) -> List[Path]:
    header = ("parameter", "value", "scheme", "seed", "final_cost", "unserved", "iterations")
    return [write_resolved(spec), write_csv(spec.output_dir / SWEEP_FILE, header, sweep_rows(spec))]


def run_scenario(spec: ExperimentSpec, seed: Optional[int] = None) -> List[Path]:
    """Generates one scenario and writes its snapshot."""
    seed = spec.scenario_seed if seed is None else seed
    scenario = generate_scenario(spec.scenario, seed)
    path = spec.output_dir / SCENARIO_FILE
    spec.output_dir.mkdir(parents=True, exist_ok=True)
    scenario.save_snapshot(path)
    logger.info("Experiments.ScenarioWritten", path, seed)
    return [write_resolved(spec), path]


def run_optimize(spec: ExperimentSpec, seed: Optional[int] = None) -> List[Path]:
    """Single solve: allocation, per-device cost breakdown and trace."""
    seed = spec.scenario_seed if seed is None else seed
    scenario = generate_scenario(spec.scenario, seed)
    channel = compute_channel(scenario)
    solution, trace = solve(scenario, spec.solver, seed=seed, channel=channel, telemetry_factory=_telemetry(spec))
    for violation in check_feasibility(solution, scenario, spec.solver.cost, tolerance=1e-9):
        logger.warning("Experiments.Violation", violation)
    breakdown = total_cost(solution, scenario, channel, spec.solver.cost)

    allocation = [(d, server, rb, watts_to_dbm(power), theta) for d, server, rb, power, theta in solution.to_rows()]
    out = spec.output_dir
    return [write_resolved(spec),
            write_csv(out / ALLOCATION_FILE, ("device_id", "server", "rb", "power_dbm", "theta"), allocation),
            write_csv(out / BREAKDOWN_FILE, ("device_id", "latency_s", "energy_j", "theta", "cost"),
                      breakdown.to_rows()),
            write_csv(out / TRACE_FILE, ("iteration", "update", "block", "cost", "unserved"), trace.to_rows())]


def run_experiment(spec: ExperimentSpec) -> List[Path]:
    runners: Dict[str, Callable[[ExperimentSpec], List[Path]]] = {
        "cost_surface": run_cost_surface,
        "solver_compare": run_solver_compare,
        "training_curves": run_training_curves,
        "custom": run_sweep,
    }
    logger.info("Experiments.Start", spec.kind, len(spec.seeds), spec.output_dir)
    return runners[spec.kind](spec)
