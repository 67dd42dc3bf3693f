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

import os
from typing import Dict, List

import numpy as np
import pytest

from dsfl_sim.config import parse_config, training_hyper
from dsfl_sim.dataset import load_mnist, shard_iid
from dsfl_sim.dsfl_engine import run_sfl
from dsfl_sim.errors import DatasetFormatError
from dsfl_sim.experiments import (SCHEMES, solver_compare_runs, summarize,
                                  training_curve_rows)

SLOW_TESTS_ENV = "DSFL_SIM_SLOW_TESTS"

pytestmark = [
    pytest.mark.slow,
    pytest.mark.skipif(os.environ.get(SLOW_TESTS_ENV) != "1", reason=f"set {SLOW_TESTS_ENV}=1 to run"),
]


@pytest.fixture(scope="module")
def mnist():
    try:
        return load_mnist(split="train"), load_mnist(split="test")
    except DatasetFormatError as e:
        pytest.skip(str(e))


def test_scheme_ordering_over_twenty_seeds(tmp_path):
    spec = parse_config(overrides={"experiment": {"output_dir": str(tmp_path), "max_workers": 4}})
    assert spec.scenario.num_devices == 48
    assert len(spec.seeds) == 20

    traces = solver_compare_runs(spec)
    means = {scheme: mean for scheme, _, mean, _, _ in summarize(traces)}

    assert means["proposed"] < means["baseline_a"] < means["baseline_r"]
    assert means["proposed"] <= 0.95 * means["baseline_r"]
    for (scheme, seed), trace in traces.items():
        costs = trace.cycle_costs()
        assert scheme in SCHEMES
        assert all(b <= a + 1e-12 * a for a, b in zip(costs, costs[1:]))


def test_mnist_training_files(mnist):
    train, test = mnist

    assert train.images.shape == (60000, 28, 28)
    assert len(train.labels) == 60000
    assert len(test) == 10000
    assert 0.0 <= train.images.min() and train.images.max() <= 1.0


def test_dsfl_reaches_sfl_accuracy(tmp_path, mnist):
    train, test = mnist
    spec = parse_config(overrides={"experiment": {"kind": "training_curves", "output_dir": str(tmp_path),
                                                  "max_workers": 4}})

    rows = training_curve_rows(spec, train, test)

    final_round = spec.training.hyper.rounds
    curves: Dict[str, Dict[int, List[float]]] = {}
    for protocol, k, seed, round_index, accuracy, *_ in rows:
        if round_index == 0:
            assert accuracy == pytest.approx(0.1, abs=0.05)
        curves.setdefault(f"{protocol}{k}", {}).setdefault(round_index, []).append(accuracy)
    mean_curves = {name: {r: float(np.mean(v)) for r, v in by_round.items()} for name, by_round in curves.items()}
    sfl = mean_curves["sfl"][final_round]
    for k in spec.training.edge_aggregations:
        curve = mean_curves[f"dsfl{k}"]
        assert curve[final_round] >= sfl
        assert curve[final_round] >= 0.80
        reached = min(r for r, accuracy in curve.items() if accuracy >= sfl)
        assert reached <= 0.9 * final_round


def test_iid_sfl_accuracy_floor(tmp_path, mnist):
    train, test = mnist
    spec = parse_config(overrides={"experiment": {"output_dir": str(tmp_path)}})
    training = spec.training
    shards = shard_iid(train, training.num_shards, training.shard_size, training.num_devices, 0)

    metrics = run_sfl(shards, training_hyper(spec, 0, 1), test)

    assert metrics[-1].test_accuracy >= 0.85
