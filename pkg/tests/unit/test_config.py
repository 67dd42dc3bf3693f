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

from pathlib import Path

import pytest
import toml

from dsfl_sim.config import (DEFAULT_SEEDS, DEFAULT_TRAINING_SEEDS,
                             RESOLVED_CONFIG_FILE, build_spec, parse_config,
                             training_hyper, write_resolved)
from dsfl_sim.cost_model import CostParams
from dsfl_sim.errors import InvalidConfigError
from dsfl_sim.scenario import ScenarioConfig


def _write(tmp_path, data):
    path = tmp_path / "config.toml"
    path.write_text(toml.dumps(data))
    return path


def test_defaults_without_file():
    spec = parse_config()

    assert spec.kind == "solver_compare"
    assert spec.scenario == ScenarioConfig()
    assert spec.scenario.resolved_capacity == 8
    assert spec.solver.cost == CostParams()
    assert spec.solver.tolerance == 1e-4
    assert spec.solver.max_iterations == 200
    assert spec.seeds == DEFAULT_SEEDS
    assert spec.training.hyper.batch_size == 32
    assert spec.training.hyper.learning_rate == 0.05
    assert spec.training.hyper.hidden_sizes == (128,)
    assert spec.training.edge_aggregations == (2, 4)
    assert spec.training.num_devices == 20
    assert spec.output_dir == Path("results")


def test_minimal_file(tmp_path):
    spec = parse_config(_write(tmp_path, {"experiment": {"kind": "training_curves"}}))

    assert spec.kind == "training_curves"
    assert spec.seeds == DEFAULT_TRAINING_SEEDS


def test_values_are_applied(tmp_path):
    path = _write(tmp_path, {
        "scenario": {"num_devices": 12, "rb_bandwidth_hz": 360000.0, "device_max_tx_power_dbm": 20.0},
        "solver": {"max_iterations": 10},
        "cost": {"include_local_compute": True},
        "experiment": {"seeds": [3, 4]},
    })

    spec = parse_config(path)

    assert spec.scenario.num_devices == 12
    assert spec.scenario.rb_bandwidth == 360000.0
    assert spec.scenario.device_max_tx_power == pytest.approx(0.1)
    assert spec.solver.max_iterations == 10
    assert spec.solver.cost.include_local_compute
    assert spec.seeds == (3, 4)
    assert spec.training.hyper.seed == 3


def test_negative_bandwidth_names_the_key(tmp_path):
    with pytest.raises(InvalidConfigError) as e:
        parse_config(_write(tmp_path, {"scenario": {"rb_bandwidth_hz": -180000.0}}))

    assert "bandwidth" in e.value.key
    assert "bandwidth" in str(e.value)


@pytest.mark.parametrize("data, key", [
    ({"scenario": {"num_device": 4}}, "num_device"),
    ({"radio": {"num_devices": 4}}, "radio"),
    ({"scenario": 4}, "scenario"),
    ({"scenario": {"num_devices": 0}}, "num_devices"),
    ({"scenario": {"num_devices": 2.5}}, "num_devices"),
    ({"cost": {"weight_latency": 0.9}}, "weight_latency"),
    ({"cost": {"theta_min": 0.9, "theta_max": 0.5}}, "theta_min"),
    ({"experiment": {"seeds": []}}, "seeds"),
    ({"experiment": {"kind": "everything"}}, "kind"),
    ({"training": {"edge_aggregations": []}}, "edge_aggregations"),
    ({"training": {"cut_index": 2}}, "cut_index"),
    ({"experiment": {"interferer_min_distance_m": 900.0, "interferer_max_distance_m": 100.0}},
     "interferer_min_distance_m"),
    ({"telemetry": {"telemetry_traces_backend": "JAEGER"}}, "telemetry_traces_backend"),
])
def test_invalid_configs_name_the_key(data, key):
    with pytest.raises(InvalidConfigError) as e:
        build_spec(data)

    assert e.value.key == key


def test_missing_file(tmp_path):
    with pytest.raises(InvalidConfigError):
        parse_config(tmp_path / "absent.toml")


def test_malformed_file(tmp_path):
    path = tmp_path / "broken.toml"
    path.write_text("[scenario\nnum_devices = ")

    with pytest.raises(InvalidConfigError) as e:
        parse_config(path)
    assert e.value.key == "config"


def test_overrides_take_precedence(tmp_path):
    path = _write(tmp_path, {"experiment": {"seeds": [1], "output_dir": "a"}})

    spec = parse_config(path, {"experiment": {"seeds": [7, 8], "output_dir": str(tmp_path / "b")}})

    assert spec.seeds == (7, 8)
    assert spec.output_dir == tmp_path / "b"


def test_with_overrides():
    spec = parse_config()

    changed = spec.with_overrides({"scenario": {"num_servers": 3}})

    assert changed.scenario.num_servers == 3
    assert spec.scenario.num_servers == 6


def test_resolved_config_round_trips(tmp_path):
    spec = parse_config(overrides={"experiment": {"output_dir": str(tmp_path)}, "scenario": {"num_devices": 10}})

    path = write_resolved(spec)
    again = parse_config(path)

    assert path.name == RESOLVED_CONFIG_FILE
    assert again == spec
    assert toml.load(path) == toml.load(write_resolved(again, tmp_path / "second"))


def test_training_hyper():
    spec = parse_config()

    hyper = training_hyper(spec, 5, 4)

    assert hyper.seed == 5
    assert hyper.edge_aggregations == 4
    assert hyper.rounds == spec.training.hyper.rounds
