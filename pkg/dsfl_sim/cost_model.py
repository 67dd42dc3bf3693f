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
from typing import TYPE_CHECKING, List, Optional, Tuple, Union

import numpy as np

from dsfl_sim.errors import InvalidArgumentError, InvalidConfigError
from dsfl_sim.utils.messages import Messages
from dsfl_sim.utils.properties import Properties, SimProperties

if TYPE_CHECKING:
    from dsfl_sim.allocation import AllocationSolution
    from dsfl_sim.channel import ChannelState
    from dsfl_sim.scenario import Scenario

INFEASIBLE = math.inf

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class CostParams:
    upload_size: float = 1e5
    weight_latency: float = 0.5
    weight_energy: float = 0.5
    iteration_coeff: float = 10.0
    theta_min: float = 0.05
    theta_max: float = 0.95
    include_local_compute: bool = False
    cycles_per_sample: float = 1e6
    kappa: float = 1e-28
    p_min: float = 1e-6

    def validate(self):
        if not self.upload_size > 0:
            raise InvalidConfigError(
                Messages.get_formatted("CostParams.NotPositive", "upload_size_bits", self.upload_size),
                key="upload_size_bits")
        if self.weight_latency < 0 or self.weight_energy < 0 \
                or not math.isclose(self.weight_latency + self.weight_energy, 1.0, abs_tol=1e-9):
            raise InvalidConfigError(
                Messages.get_formatted("CostParams.InvalidWeights", self.weight_latency, self.weight_energy),
                key="weight_latency")
        if not 0 < self.theta_min < self.theta_max < 1:
            raise InvalidConfigError(
                Messages.get_formatted("CostParams.InvalidThetaBounds", self.theta_min, self.theta_max),
                key="theta_min")
        if not self.iteration_coeff > 0:
            raise InvalidConfigError(
                Messages.get_formatted("CostParams.NotPositive", "iteration_coeff", self.iteration_coeff),
                key="iteration_coeff")
        if not self.p_min > 0:
            raise InvalidConfigError(
                Messages.get_formatted("CostParams.NotPositive", "p_min_w", self.p_min), key="p_min_w")

    @staticmethod
    def from_properties(props: Properties) -> CostParams:
        return CostParams(
            upload_size=SimProperties.UPLOAD_SIZE_BITS.get_float(props),
            weight_latency=SimProperties.WEIGHT_LATENCY.get_float(props),
            weight_energy=SimProperties.WEIGHT_ENERGY.get_float(props),
            iteration_coeff=SimProperties.ITERATION_COEFF.get_float(props),
            theta_min=SimProperties.THETA_MIN.get_float(props),
            theta_max=SimProperties.THETA_MAX.get_float(props),
            include_local_compute=SimProperties.INCLUDE_LOCAL_COMPUTE.get_bool(props),
            cycles_per_sample=SimProperties.CYCLES_PER_SAMPLE.get_float(props),
            kappa=SimProperties.KAPPA.get_float(props),
            p_min=SimProperties.P_MIN_W.get_float(props))


@dataclass(frozen=True)
class DeviceCost:
    device_id: int
    latency_trans: float
    energy_trans: float
    local_compute_time: float
    theta: float
    cost: float

    @property
    def feasible(self) -> bool:
        return math.isfinite(self.cost)


@dataclass(frozen=True)
class CostBreakdown:
    devices: Tuple[DeviceCost, ...]
    total_cost: float

    @property
    def feasible(self) -> bool:
        return math.isfinite(self.total_cost)

    @property
    def served_cost(self) -> float:
        """Sum over devices that hold both a server and a resource block."""
        return math.fsum(d.cost for d in self.devices if d.feasible)

    def to_rows(self) -> List[Tuple[int, float, float, float, float]]:
        return [(d.device_id, d.latency_trans, d.energy_trans, d.theta, d.cost) for d in self.devices]


def transmission_latency(upload_size: float, rate: float) -> float:
    if not upload_size > 0:
        raise InvalidArgumentError(Messages.get_formatted("CostModel.InvalidUploadSize", upload_size))
    if rate < 0:
        raise InvalidArgumentError(Messages.get_formatted("CostModel.NegativeRate", rate))
    if rate == 0:
        return INFEASIBLE
    return upload_size / rate


def transmission_energy(tx_power: float, latency: float) -> float:
    if tx_power < 0 or latency < 0 or math.isnan(latency):
        raise InvalidArgumentError(Messages.get_formatted("CostModel.InvalidEnergyInput", tx_power, latency))
    if math.isinf(latency):
        return INFEASIBLE
    return tx_power * latency


def local_iterations(theta: float, a: float) -> int:
    """Local iterations needed to reach relative local accuracy ``theta``: ceil(a ln(1/theta))."""
    if not 0 < theta <= 1:
        raise InvalidArgumentError(Messages.get_formatted("CostModel.InvalidTheta", theta))
    return int(math.ceil(a * math.log(1.0 / theta)))


def local_compute_time(dataset_size: float, cycles_per_sample: float, cpu_freq: float, iterations: int) -> float:
    if cpu_freq <= 0:
        raise InvalidArgumentError(Messages.get_formatted("CostModel.InvalidCpuFreq", cpu_freq))
    if dataset_size < 0 or cycles_per_sample < 0 or iterations < 0:
        raise InvalidArgumentError(
            Messages.get_formatted("CostModel.NegativeComputeInput", dataset_size, cycles_per_sample, iterations))
    return iterations * dataset_size * cycles_per_sample / cpu_freq


def local_compute_energy(
        dataset_size: float, cycles_per_sample: float, cpu_freq: float, iterations: int, kappa: float) -> float:
    """Dynamic CPU energy kappa * cycles * f^2 over all local iterations."""
    if cpu_freq <= 0:
        raise InvalidArgumentError(Messages.get_formatted("CostModel.InvalidCpuFreq", cpu_freq))
    return iterations * kappa * cycles_per_sample * dataset_size * cpu_freq ** 2


def device_cost(
        theta: float,
        latency: float,
        energy: float,
        params: CostParams,
        compute_time: float = 0.0,
        compute_energy: float = 0.0) -> float:
    """
    (1 + theta)(w_L latency + w_E energy). With ``include_local_compute`` the computation time and energy of the
    local iterations join the latency and energy terms.
    """
    if not 0 <= theta <= 1:
        raise InvalidArgumentError(Messages.get_formatted("CostModel.InvalidTheta", theta))
    if math.isinf(latency) or math.isinf(energy):
        return INFEASIBLE
    if params.include_local_compute:
        latency = latency + compute_time
        energy = energy + compute_energy
    return (1.0 + theta) * (params.weight_latency * latency + params.weight_energy * energy)


class CostEvaluator:
    """
    Vectorized cost of a scenario under fixed radio conditions. Index arrays use -1 for "no resource block"
    or "no server"; such devices cost :py:data:`INFEASIBLE`.
    """

    def __init__(self, scenario: Scenario, channel: ChannelState, params: CostParams):
        self._scenario = scenario
        self._channel = channel
        self._params = params
        self._cpu = np.array([d.cpu_cycles_per_sec for d in scenario.devices], dtype=float)
        self._data = np.array([d.dataset_size for d in scenario.devices], dtype=float)
        self._denominator = channel.interference_plus_noise()

    @property
    def scenario(self) -> Scenario:
        return self._scenario

    @property
    def channel(self) -> ChannelState:
        return self._channel

    @property
    def params(self) -> CostParams:
        return self._params

    def iterations(self, theta: ArrayLike) -> np.ndarray:
        return np.ceil(self._params.iteration_coeff * np.log(1.0 / np.asarray(theta, dtype=float)))

    def compute_terms(self, theta: ArrayLike, devices: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
        """Local computation (time, energy) of ``devices`` at ``theta``; zeros unless local compute is included."""
        theta = np.asarray(theta, dtype=float)
        if not self._params.include_local_compute:
            return np.zeros_like(theta), np.zeros_like(theta)
        idx = np.arange(self._scenario.num_devices) if devices is None else devices
        work = self.iterations(theta) * self._params.cycles_per_sample * self._data[idx]
        return work / self._cpu[idx], self._params.kappa * work * self._cpu[idx] ** 2

    def transmission(self, power: ArrayLike, gain: ArrayLike, denominator: ArrayLike,
                     bandwidth: ArrayLike) -> Tuple[np.ndarray, np.ndarray]:
        power = np.asarray(power, dtype=float)
        rate = bandwidth * np.log2(1.0 + power * gain / denominator)
        with np.errstate(divide="ignore", invalid="ignore"):
            latency = np.where(rate > 0, self._params.upload_size / np.where(rate > 0, rate, 1.0), INFEASIBLE)
        energy = np.where(np.isinf(latency), INFEASIBLE, power * np.where(np.isinf(latency), 0.0, latency))
        return latency, energy

    def combine(self, theta: ArrayLike, latency: np.ndarray, energy: np.ndarray,
                compute_time: ArrayLike = 0.0, compute_energy: ArrayLike = 0.0) -> np.ndarray:
        p = self._params
        with np.errstate(invalid="ignore"):
            cost = (1.0 + np.asarray(theta)) * (p.weight_latency * (latency + compute_time)
                                                + p.weight_energy * (energy + compute_energy))
        return np.where(np.isinf(latency), INFEASIBLE, cost)

    def device_costs(self, power: np.ndarray, rb: np.ndarray, server: np.ndarray, theta: np.ndarray) -> np.ndarray:
        served = (rb >= 0) & (server >= 0)
        devices = np.arange(self._scenario.num_devices)
        r = np.where(served, rb, 0)
        s = np.where(served, server, 0)
        latency, energy = self.transmission(
            power, self._channel.gain[devices, s], self._denominator[s, r], self._scenario.bandwidths[r])
        compute_time, compute_energy = self.compute_terms(theta)
        cost = self.combine(theta, latency, energy, compute_time, compute_energy)
        return np.where(served, cost, INFEASIBLE)

    def rb_cost_matrix(self, power: np.ndarray, server: np.ndarray, theta: np.ndarray) -> np.ndarray:
        """device x resource block cost at each device's current server."""
        s = np.where(server >= 0, server, 0)
        devices = np.arange(self._scenario.num_devices)
        gain = self._channel.gain[devices, s][:, None]
        latency, energy = self.transmission(
            power[:, None], gain, self._denominator[s, :], self._scenario.bandwidths[None, :])
        compute_time, compute_energy = self.compute_terms(theta)
        cost = self.combine(theta[:, None], latency, energy, compute_time[:, None], compute_energy[:, None])
        cost[server < 0, :] = INFEASIBLE
        return cost

    def server_cost_matrix(self, power: np.ndarray, rb: np.ndarray, theta: np.ndarray) -> np.ndarray:
        """device x server cost on each device's current resource block."""
        r = np.where(rb >= 0, rb, 0)
        latency, energy = self.transmission(
            power[:, None], self._channel.gain, self._denominator[:, r].T, self._scenario.bandwidths[r][:, None])
        compute_time, compute_energy = self.compute_terms(theta)
        cost = self.combine(theta[:, None], latency, energy, compute_time[:, None], compute_energy[:, None])
        cost[rb < 0, :] = INFEASIBLE
        return cost

    def single_device_cost(self, device: int, rb: int, server: int, power: ArrayLike, theta: ArrayLike) -> np.ndarray:
        latency, energy = self.transmission(
            power, self._channel.gain[device, server], self._denominator[server, rb], self._scenario.bandwidths[rb])
        theta_arr = np.asarray(theta, dtype=float)
        compute_time, compute_energy = self.compute_terms(
            theta_arr, np.full(theta_arr.shape, device, dtype=int) if theta_arr.ndim else np.array(device))
        return self.combine(theta_arr, latency, energy, compute_time, compute_energy)

    def breakdown(self, power: np.ndarray, rb: np.ndarray, server: np.ndarray, theta: np.ndarray) -> CostBreakdown:
        served = (rb >= 0) & (server >= 0)
        devices = np.arange(self._scenario.num_devices)
        r = np.where(served, rb, 0)
        s = np.where(served, server, 0)
        latency, energy = self.transmission(
            power, self._channel.gain[devices, s], self._denominator[s, r], self._scenario.bandwidths[r])
        latency = np.where(served, latency, INFEASIBLE)
        energy = np.where(served, energy, INFEASIBLE)
        compute_time, compute_energy = self.compute_terms(theta)
        cost = np.where(served, self.combine(theta, latency, energy, compute_time, compute_energy), INFEASIBLE)
        records = tuple(
            DeviceCost(int(d), float(latency[d]), float(energy[d]),
                       float(compute_time[d]) if self._params.include_local_compute else 0.0,
                       float(theta[d]), float(cost[d]))
            for d in devices)
        total = INFEASIBLE if not np.all(np.isfinite(cost)) else math.fsum(float(c) for c in cost)
        return CostBreakdown(records, total)


def total_cost(solution: AllocationSolution, scenario: Scenario, channel: ChannelState,
               params: CostParams) -> CostBreakdown:
    """
    Composes SINR, rate, latency, energy and device cost for every device and sums them. A device without a
    resource block or server is infeasible, and so is the total.
    """
    solution.check_shape(scenario)
    evaluator = CostEvaluator(scenario, channel, params)
    return evaluator.breakdown(solution.power, solution.rb_of_device(), solution.server_of_device(), solution.theta)
