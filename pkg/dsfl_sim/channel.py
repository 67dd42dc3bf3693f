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
from typing import TYPE_CHECKING, Union

import numpy as np

from dsfl_sim.errors import InvalidArgumentError, UnknownEntityError
from dsfl_sim.utils.messages import Messages

if TYPE_CHECKING:
    from dsfl_sim.scenario import Scenario

SPEED_OF_LIGHT = 2.998e8
MIN_DISTANCE_M = 1.0

ArrayLike = Union[float, np.ndarray]


def path_loss_db(distance: ArrayLike, carrier_freq: float) -> ArrayLike:
    """Free-space path loss. Distances below one meter are clamped to one meter."""
    if carrier_freq <= 0:
        raise InvalidArgumentError(Messages.get_formatted("Channel.InvalidFrequency", carrier_freq))
    d = np.maximum(distance, MIN_DISTANCE_M)
    loss = 20.0 * np.log10(d) + 20.0 * math.log10(carrier_freq) + 20.0 * math.log10(4.0 * math.pi / SPEED_OF_LIGHT)
    return float(loss) if np.ndim(loss) == 0 else loss


def channel_gain(distance: ArrayLike, carrier_freq: float) -> ArrayLike:
    """Linear power gain 10^(-PL/10), capped at 1 for the (sub-wavelength) cases where the loss would be negative."""
    gain = np.minimum(np.power(10.0, -np.asarray(path_loss_db(distance, carrier_freq)) / 10.0), 1.0)
    return float(gain) if np.ndim(gain) == 0 else gain


def noise_power(noise_psd: float, bandwidth: ArrayLike) -> ArrayLike:
    return noise_psd * bandwidth


def _distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)


@dataclass(frozen=True)
class ChannelState:
    """
    gain: device x server linear gains.
    cellular_gain: resource block x server gains of each block's cellular user.
    interference: server x resource block received cellular power in watts.
    noise: per resource block noise power in watts.
    """
    gain: np.ndarray
    cellular_gain: np.ndarray
    interference: np.ndarray
    noise: np.ndarray

    def interference_plus_noise(self) -> np.ndarray:
        """server x resource block denominator of the SINR."""
        return self.interference + self.noise[None, :]


def compute_channel(scenario: Scenario) -> ChannelState:
    gain = np.asarray(channel_gain(_distances(scenario.device_positions, scenario.server_positions),
                                   scenario.carrier_freq))
    cellular_gain = np.asarray(channel_gain(_distances(scenario.cellular_positions, scenario.server_positions),
                                            scenario.carrier_freq))
    interference = (cellular_gain * scenario.cellular_tx_powers[:, None]).T
    noise = np.asarray(noise_power(scenario.noise_psd, scenario.bandwidths), dtype=float)
    for array in (gain, cellular_gain, interference, noise):
        array.setflags(write=False)
    return ChannelState(gain, cellular_gain, interference, noise)


def sinr(device: int, rb: int, server: int, tx_power: float, scenario: Scenario, channel: ChannelState) -> float:
    """
    Uplink SINR of ``device`` on ``rb`` at ``server``. Only the block's cellular user interferes;
    learning devices hold their blocks exclusively and never interfere with each other.
    """
    if not 0 <= device < scenario.num_devices:
        raise UnknownEntityError(Messages.get_formatted("Channel.UnknownEntity", "device", device))
    if not 0 <= rb < scenario.num_resource_blocks:
        raise UnknownEntityError(Messages.get_formatted("Channel.UnknownEntity", "resource block", rb))
    if not 0 <= server < scenario.num_servers:
        raise UnknownEntityError(Messages.get_formatted("Channel.UnknownEntity", "edge server", server))
    max_power = scenario.devices[device].max_tx_power
    if tx_power < 0 or tx_power > max_power:
        raise InvalidArgumentError(Messages.get_formatted("Channel.InvalidPower", tx_power, max_power))

    denominator = channel.noise[rb] + channel.interference[server, rb]
    return float(tx_power * channel.gain[device, server] / denominator)


def achievable_rate(sinr_value: ArrayLike, bandwidth: ArrayLike) -> ArrayLike:
    """Shannon rate B log2(1 + SINR) in bits per second."""
    if np.any(np.asarray(sinr_value) < 0):
        raise InvalidArgumentError(Messages.get_formatted("Channel.NegativeSinr", sinr_value))
    if np.any(np.asarray(bandwidth) <= 0):
        raise InvalidArgumentError(Messages.get_formatted("Channel.InvalidBandwidth", bandwidth))
    rate = bandwidth * np.log2(1.0 + np.asarray(sinr_value, dtype=float))
    return float(rate) if np.ndim(rate) == 0 else rate
