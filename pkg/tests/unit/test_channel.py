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

from dsfl_sim.channel import (achievable_rate, channel_gain, compute_channel,
                              noise_power, path_loss_db, sinr)
from dsfl_sim.errors import InvalidArgumentError, UnknownEntityError
from dsfl_sim.scenario import ScenarioConfig, generate_scenario
from dsfl_sim.utils.units import dbm_to_watts, watts_to_dbm
from .utils.unit_test_utils import make_scenario


@pytest.mark.parametrize("distance, expected", [(1.0, 38.46), (100.0, 78.46)])
def test_free_space_path_loss(distance, expected):
    assert path_loss_db(distance, 2e9) == pytest.approx(expected, abs=0.05)


def test_path_loss_ten_times_distance_adds_twenty_db():
    assert path_loss_db(370.0, 2e9) - path_loss_db(37.0, 2e9) == pytest.approx(20.0, abs=1e-9)


def test_distance_clamped_to_one_meter():
    assert path_loss_db(0.0, 2e9) == path_loss_db(1.0, 2e9)
    assert channel_gain(0.2, 2e9) == channel_gain(1.0, 2e9)


def test_invalid_frequency():
    with pytest.raises(InvalidArgumentError):
        path_loss_db(10.0, 0.0)


def test_gain_strictly_decreasing_in_distance():
    gains = channel_gain(np.array([1.0, 2.0, 10.0, 100.0, 1000.0]), 2e9)

    assert np.all(np.diff(gains) < 0)
    assert np.all((gains > 0) & (gains <= 1))


def test_noise_floor_of_one_resource_block():
    noise = noise_power(dbm_to_watts(-174.0), 180_000.0)

    assert watts_to_dbm(noise) == pytest.approx(-121.45, abs=0.01)


def test_channel_state_shapes_and_determinism(small_config):
    scenario = generate_scenario(small_config, 4)
    first = compute_channel(scenario)
    second = compute_channel(generate_scenario(small_config, 4))

    assert first.gain.shape == (6, 2)
    assert first.cellular_gain.shape == (6, 2)
    assert first.interference.shape == (2, 6)
    assert np.all(first.interference >= 0)
    assert np.array_equal(first.gain, second.gain)
    assert np.array_equal(first.interference, second.interference)
    assert not first.gain.flags.writeable


def test_sinr_without_interference_is_power_gain_over_noise():
    scenario = make_scenario([(100.0, 0.0)], [(0.0, 0.0)], [(0.0, 0.0)], cellular_power_dbm=-math.inf)
    channel = compute_channel(scenario)
    power = 0.1

    expected = power * channel.gain[0, 0] / (scenario.noise_psd * 180_000.0)
    assert sinr(0, 0, 0, power, scenario, channel) == pytest.approx(expected, rel=1e-12)


def test_sinr_symmetric_interferer_approaches_one():
    scenario = make_scenario([(300.0, 0.0)], [(0.0, 0.0)], [(0.0, 300.0)], max_power_dbm=46.0)
    channel = compute_channel(scenario)

    assert sinr(0, 0, 0, dbm_to_watts(46.0), scenario, channel) == pytest.approx(1.0, rel=1e-6)


def test_sinr_monotone_in_power_and_interference():
    near = make_scenario([(100.0, 0.0)], [(0.0, 0.0)], [(0.0, 50.0)])
    far = make_scenario([(100.0, 0.0)], [(0.0, 0.0)], [(0.0, 500.0)])
    near_channel, far_channel = compute_channel(near), compute_channel(far)

    assert sinr(0, 0, 0, 0.19, near, near_channel) > sinr(0, 0, 0, 0.1, near, near_channel)
    assert sinr(0, 0, 0, 0.1, far, far_channel) > sinr(0, 0, 0, 0.1, near, near_channel)


def test_sinr_power_bounded_by_device_maximum():
    scenario = make_scenario([(100.0, 0.0)], [(0.0, 0.0)], [(0.0, 50.0)])
    channel = compute_channel(scenario)
    cap = dbm_to_watts(23.0)

    assert sinr(0, 0, 0, cap, scenario, channel) > sinr(0, 0, 0, 0.19, scenario, channel)
    with pytest.raises(InvalidArgumentError):
        sinr(0, 0, 0, 0.2, scenario, channel)


def test_sinr_unknown_ids(small_scenario, small_channel):
    with pytest.raises(UnknownEntityError):
        sinr(99, 0, 0, 0.1, small_scenario, small_channel)
    with pytest.raises(UnknownEntityError):
        sinr(0, 99, 0, 0.1, small_scenario, small_channel)
    with pytest.raises(UnknownEntityError):
        sinr(0, 0, 99, 0.1, small_scenario, small_channel)
    with pytest.raises(LookupError):
        sinr(-1, 0, 0, 0.1, small_scenario, small_channel)


def test_sinr_power_above_maximum(small_scenario, small_channel):
    with pytest.raises(InvalidArgumentError):
        sinr(0, 0, 0, 10.0, small_scenario, small_channel)


@pytest.mark.parametrize("ratio, expected", [(1.0, 180_000.0), (3.0, 360_000.0), (0.0, 0.0)])
def test_achievable_rate(ratio, expected):
    assert achievable_rate(ratio, 180_000.0) == pytest.approx(expected, rel=1e-12)


def test_rate_increasing_and_concave():
    rng = np.random.default_rng(0)
    for a, b in rng.uniform(0.0, 100.0, size=(50, 2)):
        low, high = min(a, b), max(a, b)
        if high - low < 1e-9:
            continue
        assert achievable_rate(high, 1.0) > achievable_rate(low, 1.0)
        assert achievable_rate((low + high) / 2, 1.0) >= (achievable_rate(low, 1.0) + achievable_rate(high, 1.0)) / 2


@pytest.mark.parametrize("ratio, bandwidth", [(-0.5, 180_000.0), (1.0, 0.0), (1.0, -1.0)])
def test_achievable_rate_invalid(ratio, bandwidth):
    with pytest.raises(InvalidArgumentError):
        achievable_rate(ratio, bandwidth)


def test_default_scenario_channel_gains_in_unit_interval():
    channel = compute_channel(generate_scenario(ScenarioConfig(), 0))

    assert np.all((channel.gain > 0) & (channel.gain <= 1))
