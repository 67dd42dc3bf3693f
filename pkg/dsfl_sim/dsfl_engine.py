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
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from dsfl_sim.aggregation import fedavg
from dsfl_sim.allocation import UNASSIGNED
from dsfl_sim.errors import InvalidConfigError
from dsfl_sim.split_model import (ModelPart, SplitModel, evaluate,
                                  softmax_cross_entropy, split_training_step)
from dsfl_sim.utils.log import Logger
from dsfl_sim.utils.messages import Messages
from dsfl_sim.utils.properties import Properties, SimProperties
from dsfl_sim.utils.telemetry.null_telemetry import NullTelemetryFactory
from dsfl_sim.utils.telemetry.telemetry import (TelemetryConst,
                                                TelemetryTraceLevel)
from dsfl_sim.utils.utils import SeedUtils

if TYPE_CHECKING:
    from dsfl_sim.allocation import AllocationSolution
    from dsfl_sim.dataset import Dataset, ShardedDataset
    from dsfl_sim.scenario import Scenario
    from dsfl_sim.utils.telemetry.telemetry import TelemetryFactory

logger = Logger(__name__)

BITS_PER_PARAMETER = 32


@dataclass(frozen=True)
class TrainingHyper:
    rounds: int = 50
    edge_period: int = 1
    # edge aggregations per global aggregation
    edge_aggregations: int = 2
    batch_size: int = 32
    learning_rate: float = 0.05
    cut_index: int = 1
    hidden_sizes: Tuple[int, ...] = (128,)
    seed: int = 0
    max_workers: int = 1

    def validate(self):
        for name in ("rounds", "edge_period", "edge_aggregations", "batch_size", "max_workers"):
            if getattr(self, name) < 1:
                raise InvalidConfigError(
                    Messages.get_formatted("TrainingHyper.NotPositive", name, getattr(self, name)), key=name)
        if self.learning_rate < 0:
            raise InvalidConfigError(
                Messages.get_formatted("TrainingHyper.NotPositive", "learning_rate", self.learning_rate),
                key="learning_rate")
        if not 1 <= self.cut_index <= len(self.hidden_sizes):
            raise InvalidConfigError(
                Messages.get_formatted("TrainingHyper.InvalidCut", self.cut_index, len(self.hidden_sizes) + 1),
                key="cut_index")

    @staticmethod
    def from_properties(props: Properties, seed: int = 0, edge_aggregations: int = 2) -> TrainingHyper:
        return TrainingHyper(
            rounds=SimProperties.ROUNDS.get_int(props),
            edge_period=SimProperties.EDGE_PERIOD.get_int(props),
            edge_aggregations=edge_aggregations,
            batch_size=SimProperties.BATCH_SIZE.get_int(props),
            learning_rate=SimProperties.LEARNING_RATE.get_float(props),
            cut_index=SimProperties.CUT_INDEX.get_int(props),
            hidden_sizes=tuple(int(h) for h in SimProperties.HIDDEN_SIZES.get_list(props)),
            seed=seed,
            max_workers=SimProperties.TRAINING_MAX_WORKERS.get_int(props))


@dataclass(frozen=True)
class RoundMetrics:
    """
    Round 0 is the untrained model. ``train_loss`` is the mean loss of the round's training steps (for round 0,
    of the untrained model over all device data). ``bits_uplinked`` accumulates device uplink traffic: cut-layer
    activations of every step and device-side parameters at every edge aggregation.
    """
    round: int
    test_accuracy: float
    train_loss: float
    edge_aggregations_performed: int
    global_aggregations_performed: int
    bits_uplinked: int


class EdgeGroup:
    """Devices sharing one edge server and the server-side replica they train in device-id order."""

    def __init__(self, edge_id: int, devices: Sequence[int], shards: ShardedDataset, model: SplitModel):
        self.edge_id = edge_id
        self.devices = sorted(devices)
        self.data = {d: shards.device_data(d) for d in self.devices}
        self.samples = {d: len(self.data[d][1]) for d in self.devices}
        self.server_part = model.server_part
        self.device_parts: Dict[int, ModelPart] = {d: model.device_part for d in self.devices}

    @property
    def total_samples(self) -> int:
        return sum(self.samples.values())

    def train_round(self, round_index: int, hyper: TrainingHyper) -> Tuple[float, int, int]:
        """One local epoch for every device; returns (summed loss, steps, uplinked bits)."""
        loss_sum, steps, bits = 0.0, 0, 0
        for d in self.devices:
            images, labels = self.data[d]
            order = SeedUtils.generator(hyper.seed, round_index, d).permutation(len(labels))
            device_part = self.device_parts[d]
            for start in range(0, len(order), hyper.batch_size):
                idx = order[start:start + hyper.batch_size]
                device_part, self.server_part, loss = split_training_step(
                    device_part, self.server_part, (images[idx], labels[idx]), hyper.learning_rate)
                loss_sum += loss
                steps += 1
                bits += len(idx) * device_part.output_size * BITS_PER_PARAMETER
            self.device_parts[d] = device_part
        return loss_sum, steps, bits

    def aggregated_device_part(self) -> ModelPart:
        return fedavg([self.device_parts[d] for d in self.devices], [self.samples[d] for d in self.devices])

    def aggregate(self) -> int:
        """Edge FedAvg of the group's device parts; returns the bits the devices uplinked for it."""
        averaged = self.aggregated_device_part()
        bits = len(self.devices) * averaged.num_parameters() * BITS_PER_PARAMETER
        self.device_parts = {d: averaged for d in self.devices}
        return bits

    def edge_model(self) -> SplitModel:
        return SplitModel.from_parts(self.aggregated_device_part(), self.server_part)

    def reset(self, model: SplitModel):
        self.server_part = model.server_part
        self.device_parts = {d: model.device_part for d in self.devices}


def _global_model(groups: Sequence[EdgeGroup]) -> SplitModel:
    return fedavg([g.edge_model() for g in groups], [g.total_samples for g in groups])


def _train_loss(model: SplitModel, groups: Sequence[EdgeGroup]) -> float:
    losses, counts = [], []
    for g in groups:
        for d in g.devices:
            images, labels = g.data[d]
            logits, _ = model.whole.forward(np.asarray(images, dtype=np.float64))
            losses.append(softmax_cross_entropy(logits, labels)[0])
            counts.append(len(labels))
    return float(np.average(losses, weights=counts))


def _group_devices(association: Mapping[int, int], shards: ShardedDataset) -> Dict[int, List[int]]:
    groups: Dict[int, List[int]] = {}
    for d in shards.devices:
        edge = association.get(d, UNASSIGNED)
        if edge is None or edge < 0:
            raise InvalidConfigError(Messages.get_formatted("DsflEngine.UnmappedDevice", d), key="association")
        groups.setdefault(int(edge), []).append(d)
    return groups


def _run(protocol: str, association: Mapping[int, int], shards: ShardedDataset, hyper: TrainingHyper,
         test: Dataset, telemetry_factory: Optional[TelemetryFactory]) -> List[RoundMetrics]:
    hyper.validate()
    telemetry = telemetry_factory if telemetry_factory is not None else NullTelemetryFactory()
    aggregations = telemetry.create_counter(TelemetryConst.aggregations_counter(protocol))
    input_size = shards.shards[0].images[0].size
    model = SplitModel.create(hyper.hidden_sizes, hyper.cut_index, SeedUtils.generator(hyper.seed),
                              input_size=input_size)
    groups = [EdgeGroup(edge, devices, shards, model)
              for edge, devices in sorted(_group_devices(association, shards).items())]
    test_x = test.flat()

    accuracy, _ = evaluate(model, test_x, test.labels)
    metrics = [RoundMetrics(0, accuracy, _train_loss(model, groups), 0, 0, 0)]
    edge_aggs, global_aggs, bits = 0, 0, 0

    executor = ThreadPoolExecutor(max_workers=hyper.max_workers, thread_name_prefix="EdgeGroupExecutor") \
        if hyper.max_workers > 1 and len(groups) > 1 else None
    try:
        trace_name = TelemetryConst.run_trace(protocol)
        with telemetry.open_telemetry_context(trace_name, TelemetryTraceLevel.TOP_LEVEL) as context:
            for t in range(1, hyper.rounds + 1):
                if executor is not None:
                    results = list(executor.map(lambda g: g.train_round(t, hyper), groups))
                else:
                    results = [g.train_round(t, hyper) for g in groups]
                loss_sum = sum(r[0] for r in results)
                steps = sum(r[1] for r in results)
                bits += sum(r[2] for r in results)

                if t % hyper.edge_period == 0:
                    bits += sum(g.aggregate() for g in groups)
                    edge_aggs += 1
                    aggregations.inc()
                    logger.debug("DsflEngine.EdgeAggregation", protocol, t, edge_aggs)
                    if edge_aggs % hyper.edge_aggregations == 0:
                        model = _global_model(groups)
                        for g in groups:
                            g.reset(model)
                        global_aggs += 1
                        aggregations.inc()
                        logger.debug("DsflEngine.GlobalAggregation", protocol, t, global_aggs)

                accuracy, _ = evaluate(_global_model(groups), test_x, test.labels)
                metrics.append(RoundMetrics(t, accuracy, loss_sum / max(steps, 1), edge_aggs, global_aggs, bits))
                logger.debug("DsflEngine.Round", protocol, t, accuracy, metrics[-1].train_loss)
            context.set_attribute(TelemetryConst.FINAL_ACCURACY, metrics[-1].test_accuracy)
    finally:
        if executor is not None:
            executor.shutdown()

    logger.info("DsflEngine.Finished", protocol, hyper.seed, hyper.rounds, metrics[-1].test_accuracy)
    return metrics


def run_dsfl(association: Mapping[int, int], shards: ShardedDataset, hyper: TrainingHyper, test: Dataset,
             telemetry_factory: Optional[TelemetryFactory] = None) -> List[RoundMetrics]:
    """
    Distributed split federated learning. Devices train split models against the server-side replica of their
    edge; every ``edge_period`` rounds each edge averages its devices' parts, and every ``edge_aggregations``
    edge aggregations all edges are merged into one global model that is redistributed.
    Metrics are taken each round on the sample-weighted average of the edge models.
    """
    return _run("dsfl", association, shards, hyper, test, telemetry_factory)


def run_sfl(shards: ShardedDataset, hyper: TrainingHyper, test: Dataset,
            telemetry_factory: Optional[TelemetryFactory] = None) -> List[RoundMetrics]:
    """Split federated learning: one shared server part, device parts averaged every round."""
    association = {d: 0 for d in shards.devices}
    return _run("sfl", association, shards, replace(hyper, edge_period=1, edge_aggregations=1), test,
                telemetry_factory)


def association_from_solution(solution: AllocationSolution, scenario: Optional[Scenario] = None) -> Dict[int, int]:
    """
    Device to edge server map of an allocation. Devices left without a server go to the nearest server of
    ``scenario`` when one is given.
    """
    server = solution.server_of_device()
    association: Dict[int, int] = {}
    for d, s in enumerate(server):
        if s == UNASSIGNED:
            if scenario is None:
                raise InvalidConfigError(Messages.get_formatted("DsflEngine.UnmappedDevice", d), key="association")
            distance = np.linalg.norm(scenario.server_positions - scenario.device_positions[d], axis=1)
            s = int(np.argmin(distance))
        association[d] = int(s)
    return association
