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

import numpy as np
import pytest

from dsfl_sim.errors import InvalidConfigError
from dsfl_sim.scenario import (Scenario, ScenarioConfig, generate_scenario,
                               server_grid)
from dsfl_sim.utils.units import dbm_to_watts


def test_default_cardinalities():
    scenario = generate_scenario(ScenarioConfig(), 11)

    assert scenario.num_devices == 48
    assert scenario.num_servers == 6
    assert scenario.num_resource_blocks == 48
    assert all(s.capacity == 8 for s in scenario.edge_servers)


def test_same_seed_gives_identical_scenario():
    config = ScenarioConfig(num_devices=1, num_servers=1, num_resource_blocks=1)

    assert generate_scenario(config, 5) == generate_scenario(config, 5)


def test_positions_in_area_and_servers_fixed():
    config = ScenarioConfig(num_devices=4, num_servers=2, num_resource_blocks=4)
    first = generate_scenario(config, 7)
    second = generate_scenario(config, 8)

    assert np.all((first.device_positions >= 0) & (first.device_positions <= 1000))
    assert np.all((first.cellular_positions >= 0) & (first.cellular_positions <= 1000))
    assert np.array_equal(first.server_positions, second.server_positions)
    assert not np.array_equal(first.device_positions, second.device_positions)


def test_six_servers_on_three_by_two_grid():
    grid = server_grid(6, 1000.0)

    assert grid.shape == (6, 2)
    assert len(set(grid[:, 0])) == 3
    assert len(set(grid[:, 1])) == 2
    assert tuple(grid[0]) == pytest.approx((1000 / 6, 250.0))


def test_powers_converted_to_watts():
    scenario = generate_scenario(ScenarioConfig(num_devices=2, num_servers=1, num_resource_blocks=2), 0)

    assert scenario.devices[0].max_tx_power == pytest.approx(0.19952623, rel=1e-6)
    assert scenario.resource_blocks[0].cellular_tx_power == pytest.approx(dbm_to_watts(46.0))
    assert scenario.noise_psd == pytest.approx(10 ** (-20.4))


def test_cpu_frequencies_drawn_from_range():
    config = ScenarioConfig(num_devices=20, num_servers=2, num_resource_blocks=2, cpu_freq_min=1e9, cpu_freq_max=2e9)
    scenario = generate_scenario(config, 1)
    freqs = [d.cpu_cycles_per_sec for d in scenario.devices]

    assert min(freqs) >= 1e9
    assert max(freqs) <= 2e9
    assert len(set(freqs)) == 20


@pytest.mark.parametrize("field, value, key", [
    ("num_devices", 0, "num_devices"),
    ("num_servers", 0, "num_servers"),
    ("num_resource_blocks", -1, "num_resource_blocks"),
    ("area_side", 0.0, "area_side_m"),
    ("rb_bandwidth", -180_000.0, "rb_bandwidth_hz"),
    ("carrier_freq", 0.0, "carrier_freq_hz"),
])
def test_invalid_config_names_key(field, value, key):
    config = ScenarioConfig(**{field: value})

    with pytest.raises(InvalidConfigError) as e:
        generate_scenario(config, 0)
    assert e.value.key == key
    assert key in str(e.value)


def test_explicit_capacity_used():
    scenario = generate_scenario(ScenarioConfig(num_devices=3, num_servers=2, num_resource_blocks=3,
                                                server_capacity=5), 0)

    assert list(scenario.capacities) == [5, 5]


def test_snapshot_round_trip(tmp_path):
    scenario = generate_scenario(ScenarioConfig(num_devices=5, num_servers=2, num_resource_blocks=4), 9)
    path = tmp_path / "scenario.toml"

    scenario.save_snapshot(path)

    assert Scenario.load_snapshot(path) == scenario
    assert Scenario.from_dict(scenario.to_dict()) == scenario
