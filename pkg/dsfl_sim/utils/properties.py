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

from enum import Enum
from typing import Any, Dict, List, Optional, Sequence

from dsfl_sim.errors import InvalidConfigError
from dsfl_sim.utils.messages import Messages


class Properties(Dict[str, Any]):
    pass


class PropertyKind(Enum):
    INT = "int"
    FLOAT = "float"
    BOOL = "bool"
    STR = "str"
    INT_LIST = "int_list"
    FLOAT_LIST = "float_list"


class SimProperty:
    def __init__(
            self,
            section: str,
            name: str,
            description: str,
            default_value: Optional[Any] = None,
            kind: PropertyKind = PropertyKind.STR,
            minimum: Optional[float] = None,
            maximum: Optional[float] = None,
            exclusive_minimum: bool = False,
            choices: Optional[Sequence[str]] = None):
        self.section = section
        self.name = name
        self.description = description
        self.default_value = default_value
        self.kind = kind
        self.minimum = minimum
        self.maximum = maximum
        self.exclusive_minimum = exclusive_minimum
        self.choices = choices

    def get(self, props: Properties) -> Any:
        return props.get(self.name, self.default_value)

    def get_int(self, props: Properties) -> int:
        return int(self.get(props))

    def get_float(self, props: Properties) -> float:
        return float(self.get(props))

    def get_bool(self, props: Properties) -> bool:
        value = self.get(props)
        if isinstance(value, bool):
            return value
        return value is not None and str(value).lower() == "true"

    def get_list(self, props: Properties) -> List[Any]:
        value = self.get(props)
        return list(value) if value is not None else []

    def set(self, props: Properties, value: Any):
        props[self.name] = value

    def expected_range(self) -> str:
        if self.choices is not None:
            return "one of " + ", ".join(self.choices)
        low = "-inf" if self.minimum is None else str(self.minimum)
        high = "inf" if self.maximum is None else str(self.maximum)
        left = "(" if self.exclusive_minimum or self.minimum is None else "["
        right = ")" if self.maximum is None else "]"
        return f"{self.kind.value} in {left}{low}, {high}{right}"

    def validate(self, value: Any) -> Any:
        """
        Coerces ``value`` to this property's kind and checks its range.

        :raises InvalidConfigError: naming this property and the expected range.
        """
        try:
            if self.kind in (PropertyKind.INT_LIST, PropertyKind.FLOAT_LIST):
                if not isinstance(value, (list, tuple)):
                    raise TypeError(value)
                cast = int if self.kind == PropertyKind.INT_LIST else float
                items = [self._coerce_scalar(cast, item) for item in value]
                for item in items:
                    self._check_range(item)
                return items
            if self.kind == PropertyKind.BOOL:
                if not isinstance(value, bool):
                    raise TypeError(value)
                return value
            if self.kind == PropertyKind.STR:
                value = str(value)
                if self.choices is not None and value not in self.choices:
                    raise ValueError(value)
                return value
            cast = int if self.kind == PropertyKind.INT else float
            coerced = self._coerce_scalar(cast, value)
            self._check_range(coerced)
            return coerced
        except (TypeError, ValueError):
            raise InvalidConfigError(
                Messages.get_formatted(
                    "SimProperty.InvalidValue", self.section, self.name, value, self.expected_range()),
                key=self.name)

    @staticmethod
    def _coerce_scalar(cast, value):
        if isinstance(value, bool):
            raise TypeError(value)
        if cast is int and isinstance(value, float) and not value.is_integer():
            raise ValueError(value)
        return cast(value)

    def _check_range(self, value: float):
        if self.minimum is not None:
            if value < self.minimum or (self.exclusive_minimum and value == self.minimum):
                raise ValueError(value)
        if self.maximum is not None and value > self.maximum:
            raise ValueError(value)


class SimProperties:
    # Scenario
    NUM_DEVICES = SimProperty(
        "scenario", "num_devices", "Number of learning devices.", 48, PropertyKind.INT, 1)
    NUM_SERVERS = SimProperty(
        "scenario", "num_servers", "Number of edge servers.", 6, PropertyKind.INT, 1)
    NUM_RESOURCE_BLOCKS = SimProperty(
        "scenario", "num_resource_blocks", "Number of uplink resource blocks reused from cellular users.",
        48, PropertyKind.INT, 1)
    AREA_SIDE_M = SimProperty(
        "scenario", "area_side_m", "Side of the square deployment region in meters.",
        1000.0, PropertyKind.FLOAT, 0, exclusive_minimum=True)
    CARRIER_FREQ_HZ = SimProperty(
        "scenario", "carrier_freq_hz", "Carrier frequency in Hz.", 2e9, PropertyKind.FLOAT, 0, exclusive_minimum=True)
    RB_BANDWIDTH_HZ = SimProperty(
        "scenario", "rb_bandwidth_hz", "Bandwidth of one resource block in Hz (12 subcarriers x 15 kHz).",
        180_000.0, PropertyKind.FLOAT, 0, exclusive_minimum=True)
    NOISE_PSD_DBM_HZ = SimProperty(
        "scenario", "noise_psd_dbm_hz", "Thermal noise power spectral density in dBm/Hz.",
        -174.0, PropertyKind.FLOAT)
    CELLULAR_TX_POWER_DBM = SimProperty(
        "scenario", "cellular_tx_power_dbm", "Transmit power of the cellular user occupying each resource block.",
        46.0, PropertyKind.FLOAT)
    DEVICE_MAX_TX_POWER_DBM = SimProperty(
        "scenario", "device_max_tx_power_dbm", "Maximum uplink transmit power of a learning device.",
        23.0, PropertyKind.FLOAT)
    SERVER_CAPACITY = SimProperty(
        "scenario", "server_capacity",
        "Maximum number of devices one edge server may serve. 0 selects ceil(devices / servers).",
        0, PropertyKind.INT, 0)
    CPU_FREQ_MIN_HZ = SimProperty(
        "scenario", "cpu_freq_min_hz", "Lower bound of the device CPU frequency draw.",
        1e9, PropertyKind.FLOAT, 0, exclusive_minimum=True)
    CPU_FREQ_MAX_HZ = SimProperty(
        "scenario", "cpu_freq_max_hz", "Upper bound of the device CPU frequency draw.",
        1e9, PropertyKind.FLOAT, 0, exclusive_minimum=True)
    DATASET_SIZE = SimProperty(
        "scenario", "dataset_size", "Local dataset size of each device in samples.", 300, PropertyKind.INT, 0)
    SEED = SimProperty(
        "scenario", "seed", "Seed of single-run commands (scenario, optimize).", 0, PropertyKind.INT, 0)

    # Cost
    UPLOAD_SIZE_BITS = SimProperty(
        "cost", "upload_size_bits", "Partial-model payload uploaded per round, in bits.",
        1e5, PropertyKind.FLOAT, 0, exclusive_minimum=True)
    WEIGHT_LATENCY = SimProperty(
        "cost", "weight_latency", "Weight of the transmission latency term.", 0.5, PropertyKind.FLOAT, 0, 1)
    WEIGHT_ENERGY = SimProperty(
        "cost", "weight_energy", "Weight of the transmission energy term.", 0.5, PropertyKind.FLOAT, 0, 1)
    ITERATION_COEFF = SimProperty(
        "cost", "iteration_coeff", "Coefficient a of the local iteration model ceil(a ln(1/theta)).",
        10.0, PropertyKind.FLOAT, 0, exclusive_minimum=True)
    THETA_MIN = SimProperty(
        "cost", "theta_min", "Lower bound of the relative local accuracy.", 0.05, PropertyKind.FLOAT, 0, 1,
        exclusive_minimum=True)
    THETA_MAX = SimProperty(
        "cost", "theta_max", "Upper bound of the relative local accuracy.", 0.95, PropertyKind.FLOAT, 0, 1,
        exclusive_minimum=True)
    INCLUDE_LOCAL_COMPUTE = SimProperty(
        "cost", "include_local_compute", "Add local computation time and energy to the cost.",
        False, PropertyKind.BOOL)
    CYCLES_PER_SAMPLE = SimProperty(
        "cost", "cycles_per_sample", "CPU cycles needed per sample and local iteration.",
        1e6, PropertyKind.FLOAT, 0)
    KAPPA = SimProperty(
        "cost", "kappa", "Effective switched capacitance of the device CPU.", 1e-28, PropertyKind.FLOAT, 0)
    P_MIN_W = SimProperty(
        "cost", "p_min_w", "Smallest positive transmit power considered by the power search.",
        1e-6, PropertyKind.FLOAT, 0, exclusive_minimum=True)

    # Solver
    TOLERANCE = SimProperty(
        "solver", "tolerance", "Relative cost improvement over a full block cycle below which BSUM stops.",
        1e-4, PropertyKind.FLOAT, 0, exclusive_minimum=True)
    MAX_ITERATIONS = SimProperty(
        "solver", "max_iterations", "Maximum number of full block cycles.", 200, PropertyKind.INT, 1)
    RESTARTS = SimProperty(
        "solver", "restarts", "Number of BSUM starts; the first is deterministic, the rest seeded random.",
        4, PropertyKind.INT, 1)
    REQUIRE_FULL_COVERAGE = SimProperty(
        "solver", "require_full_coverage", "Fail when some device cannot receive both a server and a resource block.",
        False, PropertyKind.BOOL)
    SOLVER_MAX_WORKERS = SimProperty(
        "solver", "max_workers", "Threads used for per-device searches inside a block.", 1, PropertyKind.INT, 1)

    # Training
    ROUNDS = SimProperty(
        "training", "rounds", "Communication rounds per run.", 50, PropertyKind.INT, 1)
    EDGE_PERIOD = SimProperty(
        "training", "edge_period", "Rounds between two edge aggregations.", 1, PropertyKind.INT, 1)
    EDGE_AGGREGATIONS = SimProperty(
        "training", "edge_aggregations", "Values of k (edge aggregations per global aggregation) to compare.",
        [2, 4], PropertyKind.INT_LIST, 1)
    BATCH_SIZE = SimProperty(
        "training", "batch_size", "Mini-batch size of the split training step.", 32, PropertyKind.INT, 1)
    LEARNING_RATE = SimProperty(
        "training", "learning_rate", "SGD learning rate.", 0.05, PropertyKind.FLOAT, 0)
    CUT_INDEX = SimProperty(
        "training", "cut_index", "Number of dense layers kept on the device.", 1, PropertyKind.INT, 1)
    HIDDEN_SIZES = SimProperty(
        "training", "hidden_sizes", "Widths of the hidden dense layers.", [128], PropertyKind.INT_LIST, 1)
    TRAINING_DEVICES = SimProperty(
        "training", "num_devices", "Number of devices taking part in training.", 20, PropertyKind.INT, 1)
    NUM_SHARDS = SimProperty(
        "training", "num_shards", "Number of label-sorted shards.", 200, PropertyKind.INT, 1)
    SHARD_SIZE = SimProperty(
        "training", "shard_size", "Images per shard.", 300, PropertyKind.INT, 1)
    SHARDS_PER_DEVICE = SimProperty(
        "training", "shards_per_device", "Shards handed to every device.", 1, PropertyKind.INT, 1)
    IID = SimProperty(
        "training", "iid", "Draw device data uniformly instead of from label-sorted shards.", False, PropertyKind.BOOL)
    TRAINING_MAX_WORKERS = SimProperty(
        "training", "max_workers", "Threads used to train edge groups of one round concurrently.",
        1, PropertyKind.INT, 1)
    DATA_DIR = SimProperty(
        "training", "data_dir", "Directory holding the MNIST IDX files. Falls back to DSFL_SIM_DATA_DIR.",
        "", PropertyKind.STR)

    # Experiment
    KIND = SimProperty(
        "experiment", "kind", "Experiment to run.", "solver_compare", PropertyKind.STR,
        choices=("cost_surface", "solver_compare", "training_curves", "custom"))
    SEEDS = SimProperty(
        "experiment", "seeds", "Seeds of the experiment. Defaults to 0..19, or 0..2 for training curves.",
        None, PropertyKind.INT_LIST, 0)
    OUTPUT_DIR = SimProperty(
        "experiment", "output_dir", "Directory receiving CSV outputs and the resolved configuration.",
        "results", PropertyKind.STR)
    EXPERIMENT_MAX_WORKERS = SimProperty(
        "experiment", "max_workers", "Threads running independent (scheme, seed) runs.", 1, PropertyKind.INT, 1)
    THETA_POINTS = SimProperty(
        "experiment", "theta_points", "Points of the relative local accuracy axis of the cost surface.",
        10, PropertyKind.INT, 1)
    SINR_POINTS = SimProperty(
        "experiment", "sinr_points", "Points of the SINR axis of the cost surface.", 10, PropertyKind.INT, 1)
    INTERFERER_MIN_DISTANCE_M = SimProperty(
        "experiment", "interferer_min_distance_m", "Closest cellular interferer of the cost surface.",
        50.0, PropertyKind.FLOAT, 0, exclusive_minimum=True)
    INTERFERER_MAX_DISTANCE_M = SimProperty(
        "experiment", "interferer_max_distance_m", "Farthest cellular interferer of the cost surface.",
        1000.0, PropertyKind.FLOAT, 0, exclusive_minimum=True)
    REFERENCE_DEVICE_DISTANCE_M = SimProperty(
        "experiment", "reference_device_distance_m", "Device-to-server distance of the cost surface.",
        100.0, PropertyKind.FLOAT, 0, exclusive_minimum=True)
    SWEEP_PARAMETER = SimProperty(
        "experiment", "sweep_parameter", "Scenario count swept by the custom experiment.", "num_devices",
        PropertyKind.STR, choices=("num_devices", "num_servers", "num_resource_blocks"))
    SWEEP_VALUES = SimProperty(
        "experiment", "sweep_values", "Values of the swept scenario count.", [12, 24, 48], PropertyKind.INT_LIST, 1)

    # Telemetry
    ENABLE_TELEMETRY = SimProperty(
        "telemetry", "enable_telemetry", "Enables telemetry of solver and training runs.", False, PropertyKind.BOOL)
    TELEMETRY_TRACES_BACKEND = SimProperty(
        "telemetry", "telemetry_traces_backend", "Method to export telemetry traces.", "NONE", PropertyKind.STR,
        choices=("OTLP", "NONE"))
    TELEMETRY_METRICS_BACKEND = SimProperty(
        "telemetry", "telemetry_metrics_backend", "Method to export telemetry metrics.", "NONE", PropertyKind.STR,
        choices=("OTLP", "NONE"))

    @classmethod
    def all(cls) -> List[SimProperty]:
        return [value for value in vars(cls).values() if isinstance(value, SimProperty)]

    @classmethod
    def by_section(cls) -> Dict[str, Dict[str, SimProperty]]:
        sections: Dict[str, Dict[str, SimProperty]] = {}
        for prop in cls.all():
            sections.setdefault(prop.section, {})[prop.name] = prop
        return sections
