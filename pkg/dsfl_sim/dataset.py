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
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

from dsfl_sim.errors import DatasetFormatError, InvalidConfigError
from dsfl_sim.utils.log import Logger
from dsfl_sim.utils.messages import Messages
from dsfl_sim.utils.utils import SeedUtils

logger = Logger(__name__)

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801
DATA_DIR_ENV = "DSFL_SIM_DATA_DIR"

MNIST_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}

PathLike = Union[str, os.PathLike]


@dataclass(frozen=True)
class Dataset:
    """images: (n, rows, cols) float32 in [0, 1]; labels: (n,) int64."""
    images: np.ndarray
    labels: np.ndarray

    def __len__(self) -> int:
        return len(self.labels)

    def flat(self) -> np.ndarray:
        return self.images.reshape(len(self.labels), -1)

    def subset(self, indices: np.ndarray) -> Dataset:
        return Dataset(self.images[indices], self.labels[indices])


def _read(path: Path) -> bytes:
    try:
        if path.suffix == ".gz":
            with gzip.open(path, "rb") as f:
                return f.read()
        return path.read_bytes()
    except OSError as e:
        raise DatasetFormatError(Messages.get_formatted("Dataset.Unreadable", path, e), "file", str(path)) from e


def _header(raw: bytes, path: Path, magic: int, dims: int, kind: str) -> Tuple[int, ...]:
    header_size = 4 * (1 + dims)
    if len(raw) < header_size:
        raise DatasetFormatError(
            Messages.get_formatted("Dataset.Truncated", path, "header", header_size, len(raw)), "header", str(path))
    fields = np.frombuffer(raw, dtype=">u4", count=1 + dims)
    if int(fields[0]) != magic:
        raise DatasetFormatError(
            Messages.get_formatted("Dataset.BadMagic", path, kind, hex(int(fields[0])), hex(magic)), "magic",
            str(path))
    return tuple(int(v) for v in fields[1:])


def _payload(raw: bytes, path: Path, offset: int, count: int) -> np.ndarray:
    if len(raw) - offset < count:
        raise DatasetFormatError(
            Messages.get_formatted("Dataset.Truncated", path, "data", count, len(raw) - offset), "data", str(path))
    return np.frombuffer(raw, dtype=np.uint8, count=count, offset=offset)


def load_dataset(images_path: PathLike, labels_path: PathLike) -> Dataset:
    """
    Parses a pair of big-endian IDX files (optionally gzip compressed) into images scaled to [0, 1] and their
    labels, paired by position.

    :raises DatasetFormatError: naming the offending field (magic, header, data or count).
    """
    images_path, labels_path = Path(images_path), Path(labels_path)

    raw = _read(images_path)
    count, rows, cols = _header(raw, images_path, IMAGES_MAGIC, 3, "images")
    pixels = _payload(raw, images_path, 16, count * rows * cols)
    images = (pixels.astype(np.float32) / np.float32(255.0)).reshape(count, rows, cols)

    raw = _read(labels_path)
    (label_count,) = _header(raw, labels_path, LABELS_MAGIC, 1, "labels")
    labels = _payload(raw, labels_path, 8, label_count).astype(np.int64)

    if label_count != count:
        raise DatasetFormatError(
            Messages.get_formatted("Dataset.CountMismatch", count, label_count, images_path, labels_path), "count",
            str(labels_path))
    logger.debug("Dataset.Loaded", count, rows, cols, images_path)
    return Dataset(images, labels)


def resolve_data_dir(data_dir: Optional[PathLike] = None) -> Path:
    """The explicit directory if given, else ``DSFL_SIM_DATA_DIR``, else the working directory."""
    if data_dir:
        return Path(data_dir)
    env = os.environ.get(DATA_DIR_ENV)
    return Path(env) if env else Path(".")


def _locate(directory: Path, stem: str) -> Path:
    for candidate in (stem, stem + ".gz", stem.replace("-idx", ".idx"), stem.replace("-idx", ".idx") + ".gz"):
        path = directory / candidate
        if path.is_file():
            return path
    raise DatasetFormatError(Messages.get_formatted("Dataset.Missing", directory / stem), "file",
                             str(directory / stem))


def load_mnist(data_dir: Optional[PathLike] = None, split: str = "train") -> Dataset:
    if split not in MNIST_FILES:
        raise InvalidConfigError(Messages.get_formatted("Dataset.UnknownSplit", split), key="split")
    directory = resolve_data_dir(data_dir)
    images, labels = MNIST_FILES[split]
    return load_dataset(_locate(directory, images), _locate(directory, labels))


@dataclass(frozen=True)
class Shard:
    images: np.ndarray
    labels: np.ndarray

    def __len__(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class ShardedDataset:
    shards: Tuple[Shard, ...]
    assignment: Dict[int, Tuple[int, ...]] = field(default_factory=dict)

    @property
    def devices(self) -> Sequence[int]:
        return sorted(self.assignment)

    def device_data(self, device: int) -> Tuple[np.ndarray, np.ndarray]:
        """Flattened images and labels of every shard held by ``device``, in shard order."""
        shards = [self.shards[i] for i in self.assignment[device]]
        images = np.concatenate([s.images.reshape(len(s), -1) for s in shards])
        labels = np.concatenate([s.labels for s in shards])
        return images, labels

    def num_samples(self, device: int) -> int:
        return sum(len(self.shards[i]) for i in self.assignment[device])


def _check_sharding(dataset: Dataset, num_shards: int, shard_size: int, devices: int, shards_per_device: int):
    if num_shards < 1 or shard_size < 1 or devices < 1 or shards_per_device < 1:
        raise InvalidConfigError(
            Messages.get_formatted("Sharding.NotPositive", num_shards, shard_size, devices, shards_per_device),
            key="num_shards")
    if num_shards * shard_size > len(dataset):
        raise InvalidConfigError(
            Messages.get_formatted("Sharding.NotEnoughData", num_shards, shard_size, len(dataset)), key="shard_size")
    if devices * shards_per_device > num_shards:
        raise InvalidConfigError(
            Messages.get_formatted("Sharding.NotEnoughShards", devices, shards_per_device, num_shards),
            key="num_devices")


def _shard(dataset: Dataset, order: np.ndarray, num_shards: int, shard_size: int, devices: int,
           shards_per_device: int, seed: int) -> ShardedDataset:
    shards = tuple(
        Shard(dataset.images[idx], dataset.labels[idx])
        for idx in (order[i * shard_size:(i + 1) * shard_size] for i in range(num_shards)))
    picked = SeedUtils.generator(seed).choice(num_shards, size=devices * shards_per_device, replace=False)
    assignment = {d: tuple(int(s) for s in picked[d * shards_per_device:(d + 1) * shards_per_device])
                  for d in range(devices)}
    return ShardedDataset(shards, assignment)


def shard_non_iid(dataset: Dataset, num_shards: int = 200, shard_size: int = 300, devices: int = 20, seed: int = 0,
                  shards_per_device: int = 1) -> ShardedDataset:
    """
    Stable-sorts the samples by label, cuts consecutive shards of ``shard_size`` and hands every device
    ``shards_per_device`` distinct shards drawn at random.
    """
    _check_sharding(dataset, num_shards, shard_size, devices, shards_per_device)
    order = np.argsort(dataset.labels, kind="stable")
    sharded = _shard(dataset, order, num_shards, shard_size, devices, shards_per_device, seed)
    logger.debug("Sharding.Created", "non-iid", num_shards, shard_size, devices)
    return sharded


def shard_iid(dataset: Dataset, num_shards: int = 200, shard_size: int = 300, devices: int = 20, seed: int = 0,
              shards_per_device: int = 1) -> ShardedDataset:
    _check_sharding(dataset, num_shards, shard_size, devices, shards_per_device)
    order = SeedUtils.generator(seed, 1).permutation(len(dataset))
    sharded = _shard(dataset, order, num_shards, shard_size, devices, shards_per_device, seed)
    logger.debug("Sharding.Created", "iid", num_shards, shard_size, devices)
    return sharded
