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
from dataclasses import dataclass
from functools import cached_property
from typing import TYPE_CHECKING, Any, Dict, Tuple

import numpy as np
import toml

from dsfl_sim.errors import InvalidConfigError
from dsfl_sim.utils.log import Logger
from dsfl_sim.utils.messages import Messages
from dsfl_sim.utils.properties import Properties, SimProperties
from dsfl_sim.utils.units import dbm_to_watts

if TYPE_CHECKING:
    from pathlib import Path

logger = Logger(__name__)

Position = Tuple[float, float]


@dataclass(frozen=True)
class ScenarioConfig:
    """Radio and deployment parameters of a scenario. All powers in watts, noise PSD in W/Hz."""
    num_devices: int = 48
    num_servers: int = 6
    num_resource_blocks: int = 48
    area_side: float = 1000.0
    carrier_freq: float = 2e9
    rb_bandwidth: float = 180_000.0
    noise_psd: float = dbm_to_watts(-174.0)
    cellular_tx_power: float = dbm_to_watts(46.0)
    device_max_tx_power: float = dbm_to_watts(23.0)
    server_capacity: int = 0
    cpu_freq_min: float = 1e9
    cpu_freq_max: float = 1e9
    dataset_size: int = 300

    @property
    def resolved_capacity(self) -> int:
        if self.server_capacity > 0:
            return self.server_capacity
        return max(1, math.ceil(self.num_devices / self.num_servers))

    def validate(self):
        for key, value in (("num_devices", self.num_devices),
                           ("num_servers", self.num_servers),
                           ("num_resource_blocks", self.num_resource_blocks)):
            if value < 1:
                raise InvalidConfigError(Messages.get_formatted("ScenarioConfig.InvalidCount", key, value), key=key)
        for key, value in (("area_side_m", self.area_side),
                           ("carrier_freq_hz", self.carrier_freq),
                           ("rb_bandwidth_hz", self.rb_bandwidth),
                           ("noise_psd_dbm_hz", self.noise_psd),
                           ("cellular_tx_power_dbm", self.cellular_tx_power),
                           ("device_max_tx_power_dbm", self.device_max_tx_power),
                           ("cpu_freq_min_hz", self.cpu_freq_min),
                           ("cpu_freq_max_hz", self.cpu_freq_max)):
            if not value > 0:
                raise InvalidConfigError(Messages.get_formatted("ScenarioConfig.NotPositive", key, value), key=key)
        if self.server_capacity < 0:
            raise InvalidConfigError(
                Messages.get_formatted("ScenarioConfig.NotPositive", "server_capacity", self.server_capacity),
                key="server_capacity")
        if self.cpu_freq_min > self.cpu_freq_max:
            raise InvalidConfigError(
                Messages.get_formatted("ScenarioConfig.InvalidCpuRange", self.cpu_freq_min, self.cpu_freq_max),
                key="cpu_freq_min_hz")
        if self.dataset_size < 0:
            raise InvalidConfigError(
                Messages.get_formatted("ScenarioConfig.InvalidCount", "dataset_size", self.dataset_size),
                key="dataset_size")

    @staticmethod
    def from_properties(props: Properties) -> ScenarioConfig:
        return ScenarioConfig(
            num_devices=SimProperties.NUM_DEVICES.get_int(props),
            num_servers=SimProperties.NUM_SERVERS.get_int(props),
            num_resource_blocks=SimProperties.NUM_RESOURCE_BLOCKS.get_int(props),
            area_side=SimProperties.AREA_SIDE_M.get_float(props),
            carrier_freq=SimProperties.CARRIER_FREQ_HZ.get_float(props),
            rb_bandwidth=SimProperties.RB_BANDWIDTH_HZ.get_float(props),
            noise_psd=dbm_to_watts(SimProperties.NOISE_PSD_DBM_HZ.get_float(props)),
            cellular_tx_power=dbm_to_watts(SimProperties.CELLULAR_TX_POWER_DBM.get_float(props)),
            device_max_tx_power=dbm_to_watts(SimProperties.DEVICE_MAX_TX_POWER_DBM.get_float(props)),
            server_capacity=SimProperties.SERVER_CAPACITY.get_int(props),
            cpu_freq_min=SimProperties.CPU_FREQ_MIN_HZ.get_float(props),
            cpu_freq_max=SimProperties.CPU_FREQ_MAX_HZ.get_float(props),
            dataset_size=SimProperties.DATASET_SIZE.get_int(props))


@dataclass(frozen=True)
class Device:
    id: int
    position: Position
    max_tx_power: float
    cpu_cycles_per_sec: float
    dataset_size: int


@dataclass(frozen=True)
class EdgeServer:
    id: int
    position: Position
    capacity: int


@dataclass(frozen=True)
class ResourceBlock:
    id: int
    bandwidth: float
    cellular_user_position: Position
    cellular_tx_power: float


@dataclass(frozen=True)
class Scenario:
    area_side: float
    devices: Tuple[Device, ...]
    edge_servers: Tuple[EdgeServer, ...]
    resource_blocks: Tuple[ResourceBlock, ...]
    carrier_freq: float
    noise_psd: float
    seed: int

    @property
    def num_devices(self) -> int:
        return len(self.devices)

    @property
    def num_servers(self) -> int:
        return len(self.edge_servers)

    @property
    def num_resource_blocks(self) -> int:
        return len(self.resource_blocks)

    @cached_property
    def device_positions(self) -> np.ndarray:
        return np.array([d.position for d in self.devices], dtype=float).reshape(-1, 2)

    @cached_property
    def server_positions(self) -> np.ndarray:
        return np.array([s.position for s in self.edge_servers], dtype=float).reshape(-1, 2)

    @cached_property
    def cellular_positions(self) -> np.ndarray:
        return np.array([rb.cellular_user_position for rb in self.resource_blocks], dtype=float).reshape(-1, 2)

    @cached_property
    def max_tx_powers(self) -> np.ndarray:
        return np.array([d.max_tx_power for d in self.devices], dtype=float)

    @cached_property
    def capacities(self) -> np.ndarray:
        return np.array([s.capacity for s in self.edge_servers], dtype=int)

    @cached_property
    def bandwidths(self) -> np.ndarray:
        return np.array([rb.bandwidth for rb in self.resource_blocks], dtype=float)

    @cached_property
    def cellular_tx_powers(self) -> np.ndarray:
        return np.array([rb.cellular_tx_power for rb in self.resource_blocks], dtype=float)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "scenario": {
                "area_side": self.area_side,
                "carrier_freq": self.carrier_freq,
                "noise_psd": self.noise_psd,
                "seed": self.seed,
            },
            "devices": [
                {"id": d.id, "x": d.position[0], "y": d.position[1], "max_tx_power": d.max_tx_power,
                 "cpu_cycles_per_sec": d.cpu_cycles_per_sec, "dataset_size": d.dataset_size}
                for d in self.devices],
            "edge_servers": [
                {"id": s.id, "x": s.position[0], "y": s.position[1], "capacity": s.capacity}
                for s in self.edge_servers],
            "resource_blocks": [
                {"id": rb.id, "bandwidth": rb.bandwidth, "cellular_x": rb.cellular_user_position[0],
                 "cellular_y": rb.cellular_user_position[1], "cellular_tx_power": rb.cellular_tx_power}
                for rb in self.resource_blocks],
        }

    @staticmethod
    def from_dict(data: Dict[str, Any]) -> Scenario:
        header = data["scenario"]
        return Scenario(
            area_side=float(header["area_side"]),
            devices=tuple(
                Device(int(d["id"]), (float(d["x"]), float(d["y"])), float(d["max_tx_power"]),
                       float(d["cpu_cycles_per_sec"]), int(d["dataset_size"]))
                for d in data["devices"]),
            edge_servers=tuple(
                EdgeServer(int(s["id"]), (float(s["x"]), float(s["y"])), int(s["capacity"]))
                for s in data["edge_servers"]),
            resource_blocks=tuple(
                ResourceBlock(int(rb["id"]), float(rb["bandwidth"]),
                              (float(rb["cellular_x"]), float(rb["cellular_y"])), float(rb["cellular_tx_power"]))
                for rb in data["resource_blocks"]),
            carrier_freq=float(header["carrier_freq"]),
            noise_psd=float(header["noise_psd"]),
            seed=int(header["seed"]))

    def save_snapshot(self, path: Path):
        with open(path, "w") as f:
            toml.dump(self.to_dict(), f)

    @staticmethod
    def load_snapshot(path: Path) -> Scenario:
        with open(path, "r") as f:
            return Scenario.from_dict(toml.load(f))


def server_grid(num_servers: int, area_side: float) -> np.ndarray:
    """
    Fixed row-major grid of server positions at cell centres, independent of any seed.
    Six servers give three columns and two rows.
    """
    cols = math.ceil(math.sqrt(num_servers))
    rows = math.ceil(num_servers / cols)
    positions = []
    for row in range(rows):
        for col in range(cols):
            if len(positions) == num_servers:
                break
            positions.append(((col + 0.5) * area_side / cols, (row + 0.5) * area_side / rows))
    return np.array(positions, dtype=float)


def generate_scenario(config: ScenarioConfig, seed: int) -> Scenario:
    config.validate()
    rng = np.random.default_rng(seed)

    device_xy = rng.uniform(0.0, config.area_side, size=(config.num_devices, 2))
    cpu = rng.uniform(config.cpu_freq_min, config.cpu_freq_max, size=config.num_devices)
    cellular_xy = rng.uniform(0.0, config.area_side, size=(config.num_resource_blocks, 2))
    server_xy = server_grid(config.num_servers, config.area_side)
    capacity = config.resolved_capacity

    devices = tuple(
        Device(i, (float(device_xy[i, 0]), float(device_xy[i, 1])), config.device_max_tx_power,
               float(cpu[i]), config.dataset_size)
        for i in range(config.num_devices))
    servers = tuple(
        EdgeServer(j, (float(server_xy[j, 0]), float(server_xy[j, 1])), capacity)
        for j in range(config.num_servers))
    blocks = tuple(
        ResourceBlock(r, config.rb_bandwidth, (float(cellular_xy[r, 0]), float(cellular_xy[r, 1])),
                      config.cellular_tx_power)
        for r in range(config.num_resource_blocks))

    logger.debug("Scenario.Generated", config.num_devices, config.num_servers, config.num_resource_blocks, seed)
    return Scenario(config.area_side, devices, servers, blocks, config.carrier_freq, config.noise_psd, seed)
