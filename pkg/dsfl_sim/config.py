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

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple

import toml

from dsfl_sim.bsum_solver import SolverParams
from dsfl_sim.dsfl_engine import TrainingHyper
from dsfl_sim.errors import InvalidConfigError
from dsfl_sim.scenario import ScenarioConfig
from dsfl_sim.utils.log import Logger
from dsfl_sim.utils.messages import Messages
from dsfl_sim.utils.properties import Properties, SimProperties

logger = Logger(__name__)

RESOLVED_CONFIG_FILE = "resolved_config.toml"

DEFAULT_SEEDS = tuple(range(20))
DEFAULT_TRAINING_SEEDS = tuple(range(3))

Sections = Dict[str, Properties]


@dataclass(frozen=True)
class TrainingSettings:
    hyper: TrainingHyper
    edge_aggregations: Tuple[int, ...]
    num_devices: int
    num_shards: int
    shard_size: int
    shards_per_device: int
    iid: bool
    data_dir: str


@dataclass(frozen=True)
class SurfaceSettings:
    theta_points: int
    sinr_points: int
    interferer_min_distance: float
    interferer_max_distance: float
    reference_distance: float


@dataclass(frozen=True)
class SweepSettings:
    parameter: str
    values: Tuple[int, ...]


@dataclass(frozen=True)
class ExperimentSpec:
    """A fully resolved and validated experiment. ``sections`` is the resolved key set that gets echoed."""
    kind: str
    scenario: ScenarioConfig
    scenario_seed: int
    solver: SolverParams
    training: TrainingSettings
    surface: SurfaceSettings
    sweep: SweepSettings
    seeds: Tuple[int, ...]
    output_dir: Path
    max_workers: int
    telemetry: Properties = field(compare=False)
    sections: Sections = field(compare=False, repr=False)

    def with_overrides(self, overrides: Mapping[str, Mapping[str, Any]]) -> ExperimentSpec:
        """Re-resolves the spec with some keys replaced, e.g. seeds or the output directory from the CLI."""
        merged: Dict[str, Dict[str, Any]] = {section: dict(values) for section, values in self.sections.items()}
        for section, values in overrides.items():
            merged.setdefault(section, {}).update(values)
        return build_spec(merged)


def _resolve_sections(data: Mapping[str, Any]) -> Sections:
    registry = SimProperties.by_section()
    for section, values in data.items():
        if section not in registry:
            raise InvalidConfigError(Messages.get_formatted("Config.UnknownSection", section), key=section)
        if not isinstance(values, Mapping):
            raise InvalidConfigError(Messages.get_formatted("Config.NotATable", section), key=section)
        for key in values:
            if key not in registry[section]:
                raise InvalidConfigError(Messages.get_formatted("Config.UnknownKey", section, key), key=key)

    sections: Sections = {}
    for section, props in registry.items():
        given = data.get(section, {})
        resolved = Properties()
        for name, prop in props.items():
            if name in given:
                resolved[name] = prop.validate(given[name])
            elif prop.default_value is not None:
                default = prop.default_value
                resolved[name] = list(default) if isinstance(default, list) else default
        sections[section] = resolved
    return sections


def build_spec(data: Mapping[str, Any]) -> ExperimentSpec:
    """
    Validates a configuration mapping (section -> key -> value) and applies defaults.

    :raises InvalidConfigError: naming the offending key and, for range violations, the expected range.
    """
    sections = _resolve_sections(data)
    experiment = sections["experiment"]
    kind = SimProperties.KIND.get(experiment)

    if SimProperties.SEEDS.name not in experiment:
        SimProperties.SEEDS.set(
            experiment, list(DEFAULT_TRAINING_SEEDS if kind == "training_curves" else DEFAULT_SEEDS))
    seeds = tuple(int(s) for s in SimProperties.SEEDS.get_list(experiment))
    if len(seeds) == 0:
        raise InvalidConfigError(Messages.get("Config.NoSeeds"), key=SimProperties.SEEDS.name)

    scenario = ScenarioConfig.from_properties(sections["scenario"])
    scenario.validate()
    solver = SolverParams.from_properties(sections["solver"], sections["cost"])
    solver.validate()

    training_props = sections["training"]
    edge_aggregations = tuple(int(k) for k in SimProperties.EDGE_AGGREGATIONS.get_list(training_props))
    if len(edge_aggregations) == 0:
        raise InvalidConfigError(Messages.get("Config.NoEdgeAggregations"),
                                 key=SimProperties.EDGE_AGGREGATIONS.name)
    hyper = TrainingHyper.from_properties(training_props, seeds[0], edge_aggregations[0])
    hyper.validate()
    training = TrainingSettings(
        hyper=hyper,
        edge_aggregations=edge_aggregations,
        num_devices=SimProperties.TRAINING_DEVICES.get_int(training_props),
        num_shards=SimProperties.NUM_SHARDS.get_int(training_props),
        shard_size=SimProperties.SHARD_SIZE.get_int(training_props),
        shards_per_device=SimProperties.SHARDS_PER_DEVICE.get_int(training_props),
        iid=SimProperties.IID.get_bool(training_props),
        data_dir=str(SimProperties.DATA_DIR.get(training_props)))

    surface = SurfaceSettings(
        theta_points=SimProperties.THETA_POINTS.get_int(experiment),
        sinr_points=SimProperties.SINR_POINTS.get_int(experiment),
        interferer_min_distance=SimProperties.INTERFERER_MIN_DISTANCE_M.get_float(experiment),
        interferer_max_distance=SimProperties.INTERFERER_MAX_DISTANCE_M.get_float(experiment),
        reference_distance=SimProperties.REFERENCE_DEVICE_DISTANCE_M.get_float(experiment))
    if surface.interferer_min_distance > surface.interferer_max_distance:
        raise InvalidConfigError(
            Messages.get_formatted("Config.InvalidInterfererRange", surface.interferer_min_distance,
                                   surface.interferer_max_distance),
            key=SimProperties.INTERFERER_MIN_DISTANCE_M.name)

    sweep = SweepSettings(
        parameter=str(SimProperties.SWEEP_PARAMETER.get(experiment)),
        values=tuple(int(v) for v in SimProperties.SWEEP_VALUES.get_list(experiment)))
    if len(sweep.values) == 0:
        raise InvalidConfigError(Messages.get("Config.NoSweepValues"), key=SimProperties.SWEEP_VALUES.name)

    return ExperimentSpec(
        kind=kind,
        scenario=scenario,
        scenario_seed=SimProperties.SEED.get_int(sections["scenario"]),
        solver=solver,
        training=training,
        surface=surface,
        sweep=sweep,
        seeds=seeds,
        output_dir=Path(str(SimProperties.OUTPUT_DIR.get(experiment))),
        max_workers=SimProperties.EXPERIMENT_MAX_WORKERS.get_int(experiment),
        telemetry=sections["telemetry"],
        sections=sections)


def parse_config(path: Optional[Path] = None, overrides: Optional[Mapping[str, Mapping[str, Any]]] = None) \
        -> ExperimentSpec:
    """Reads a TOML configuration file; without ``path`` every default applies."""
    data: Dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise InvalidConfigError(Messages.get_formatted("Config.Missing", path), key="config")
        try:
            data = toml.load(path)
        except toml.TomlDecodeError as e:
            raise InvalidConfigError(Messages.get_formatted("Config.Malformed", path, e), key="config") from e
    for section, values in (overrides or {}).items():
        data.setdefault(section, {}).update(values)
    spec = build_spec(data)
    logger.debug("Config.Parsed", path, spec.kind, len(spec.seeds))
    return spec


def write_resolved(spec: ExperimentSpec, directory: Optional[Path] = None) -> Path:
    """Echoes the resolved configuration into ``directory`` (default: the spec's output directory)."""
    directory = Path(directory) if directory is not None else spec.output_dir
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / RESOLVED_CONFIG_FILE
    with open(path, "w") as f:
        toml.dump({section: dict(values) for section, values in spec.sections.items()}, f)
    return path


def training_hyper(spec: ExperimentSpec, seed: int, edge_aggregations: int) -> TrainingHyper:
    return replace(spec.training.hyper, seed=seed, edge_aggregations=edge_aggregations)
