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

import gzip
import itertools
import math
import struct
from typing import TYPE_CHECKING, List, Optional, Sequence, Tuple

import numpy as np

from dsfl_sim.dataset import Dataset
from dsfl_sim.scenario import Device, EdgeServer, ResourceBlock, Scenario
from dsfl_sim.utils.units import dbm_to_watts

if TYPE_CHECKING:
    from pathlib import Path

Point = Tuple[float, float]


def write_idx_images(path: Path, images: np.ndarray, magic: int = 0x00000803, compress: bool = False) -> Path:
    """Writes uint8 images (n, rows, cols) as an IDX file."""
    n, rows, cols = images.shape
    payload = struct.pack(">IIII", magic, n, rows, cols) + images.astype(np.uint8).tobytes()
    return _write(path, payload, compress)


def write_idx_labels(path: Path, labels: np.ndarray, magic: int = 0x00000801, compress: bool = False) -> Path:
    payload = struct.pack(">II", magic, len(labels)) + np.asarray(labels, dtype=np.uint8).tobytes()
    return _write(path, payload, compress)


def _write(path: Path, payload: bytes, compress: bool) -> Path:
    if compress:
        with gzip.open(path, "wb") as f:
            f.write(payload)
    else:
        path.write_bytes(payload)
    return path


def synthetic_dataset(n: int = 200, classes: int = 10, size: int = 4, seed: int = 0) -> Dataset:
    """
    Learnable toy images: every class lights up its own block of pixels on top of uniform noise.
    """
    rng = np.random.default_rng(seed)
    labels = np.arange(n) % classes
    rng.shuffle(labels)
    images = rng.uniform(0.0, 0.3, size=(n, size, size)).astype(np.float32)
    flat = images.reshape(n, -1)
    for i, label in enumerate(labels):
        flat[i, label % flat.shape[1]] = 1.0
    return Dataset(images, labels.astype(np.int64))


def make_scenario(devices: Sequence[Point], servers: Sequence[Point], cellular: Sequence[Point],
                  capacity: int = 1, max_power_dbm: float = 23.0, cellular_power_dbm: float = 46.0,
                  bandwidth: float = 180_000.0, capacities: Optional[Sequence[int]] = None,
                  cpu_freqs: Optional[Sequence[float]] = None) -> Scenario:
    capacities = list(capacities) if capacities is not None else [capacity] * len(servers)
    cpu_freqs = list(cpu_freqs) if cpu_freqs is not None else [1e9] * len(devices)
    return Scenario(
        area_side=1000.0,
        devices=tuple(Device(i, p, dbm_to_watts(max_power_dbm), cpu_freqs[i], 300) for i, p in enumerate(devices)),
        edge_servers=tuple(EdgeServer(j, p, capacities[j]) for j, p in enumerate(servers)),
        resource_blocks=tuple(ResourceBlock(r, bandwidth, p, dbm_to_watts(cellular_power_dbm))
                              for r, p in enumerate(cellular)),
        carrier_freq=2e9,
        noise_psd=dbm_to_watts(-174.0),
        seed=0)


def capacitated_maps(devices: int, capacities: Sequence[int]) -> List[Tuple[int, ...]]:
    """Every device to server map (no unassigned devices) that respects the capacities."""
    maps = []
    for assoc in itertools.product(range(len(capacities)), repeat=devices):
        load = np.bincount(assoc, minlength=len(capacities))
        if (load <= np.asarray(capacities)).all():
            maps.append(assoc)
    return maps


def relative_difference(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(float(np.max(np.abs(a))), float(np.max(np.abs(b))), 1e-12)
    return float(np.max(np.abs(a - b))) / scale


def is_nonincreasing(values: Sequence[float], slack: float = 1e-12) -> bool:
    return all(b <= a + slack * max(1.0, abs(a)) for a, b in zip(values, values[1:]) if math.isfinite(a))
