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

from typing import List, Sequence, TypeVar

import numpy as np

from dsfl_sim.errors import InvalidArgumentError, ShapeMismatchError
from dsfl_sim.split_model import ModelPart, SplitModel
from dsfl_sim.utils.messages import Messages

Model = TypeVar("Model", ModelPart, SplitModel)


def fedavg(models: Sequence[Model], weights: Sequence[float]) -> Model:
    """
    Parameter-wise average of ``models`` weighted by ``weights`` (sample counts). Computed as offsets from the
    first model so that averaging identical models returns them bit for bit.

    :raises ShapeMismatchError: if the models do not share one architecture.
    """
    if len(models) == 0 or len(models) != len(weights):
        raise InvalidArgumentError(Messages.get_formatted("FedAvg.InvalidInputs", len(models), len(weights)))
    w = np.asarray(weights, dtype=float)
    if (w < 0).any() or not w.sum() > 0:
        raise InvalidArgumentError(Messages.get_formatted("FedAvg.InvalidWeights", list(weights)))

    reference = models[0].architecture()
    for i, model in enumerate(models[1:], start=1):
        if model.architecture() != reference:
            raise ShapeMismatchError(Messages.get_formatted("FedAvg.ArchitectureMismatch", i))

    fractions = w / w.sum()
    params = [model.parameters() for model in models]
    averaged: List[np.ndarray] = []
    for k, p0 in enumerate(params[0]):
        acc = p0.copy()
        for fraction, other in zip(fractions[1:], params[1:]):
            if fraction > 0:
                acc += fraction * (other[k] - p0)
        averaged.append(acc)
    return models[0].with_parameters(averaged)
