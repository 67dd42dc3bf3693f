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
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from dsfl_sim.errors import InvalidArgumentError, ShapeMismatchError
from dsfl_sim.utils.messages import Messages

NUM_CLASSES = 10
INPUT_SIZE = 28 * 28

# per layer: (input, pre-activation)
Cache = List[Tuple[np.ndarray, np.ndarray]]
# per layer: (weight gradient, bias gradient)
Gradients = List[Tuple[np.ndarray, np.ndarray]]


class Activation(Enum):
    RELU = "relu"
    # the output layer emits logits; softmax is folded into the cross-entropy loss
    SOFTMAX = "softmax"


@dataclass(frozen=True)
class DenseLayer:
    weights: np.ndarray
    biases: np.ndarray
    activation: Activation

    @property
    def input_size(self) -> int:
        return self.weights.shape[0]

    @property
    def output_size(self) -> int:
        return self.weights.shape[1]

    @staticmethod
    def initialize(fan_in: int, fan_out: int, activation: Activation, rng: np.random.Generator) -> DenseLayer:
        bound = 1.0 / math.sqrt(fan_in)
        return DenseLayer(rng.uniform(-bound, bound, size=(fan_in, fan_out)),
                          rng.uniform(-bound, bound, size=fan_out), activation)


class ModelPart:
    """A contiguous run of dense layers; either side of the cut, or the whole network."""

    def __init__(self, layers: Sequence[DenseLayer]):
        self.layers: Tuple[DenseLayer, ...] = tuple(layers)
        for first, second in zip(self.layers, self.layers[1:]):
            if first.output_size != second.input_size:
                raise ShapeMismatchError(
                    Messages.get_formatted("SplitModel.LayerChain", first.output_size, second.input_size))

    @property
    def input_size(self) -> int:
        return self.layers[0].input_size

    @property
    def output_size(self) -> int:
        return self.layers[-1].output_size

    def parameters(self) -> List[np.ndarray]:
        params: List[np.ndarray] = []
        for layer in self.layers:
            params.extend((layer.weights, layer.biases))
        return params

    def num_parameters(self) -> int:
        return sum(p.size for p in self.parameters())

    def with_parameters(self, params: Sequence[np.ndarray]) -> ModelPart:
        return ModelPart([DenseLayer(params[2 * i], params[2 * i + 1], layer.activation)
                          for i, layer in enumerate(self.layers)])

    def architecture(self) -> Tuple[Tuple[int, int, Activation], ...]:
        return tuple((layer.input_size, layer.output_size, layer.activation) for layer in self.layers)

    def forward(self, x: np.ndarray) -> Tuple[np.ndarray, Cache]:
        if x.ndim != 2 or x.shape[1] != self.input_size:
            raise ShapeMismatchError(Messages.get_formatted("SplitModel.InputShape", x.shape, self.input_size))
        cache: Cache = []
        for layer in self.layers:
            z = x @ layer.weights + layer.biases
            cache.append((x, z))
            x = np.maximum(z, 0.0) if layer.activation == Activation.RELU else z
        return x, cache

    def backward(self, cache: Cache, grad_out: np.ndarray) -> Tuple[np.ndarray, Gradients]:
        """Back-propagates the gradient with respect to this part's output; returns the input gradient."""
        grads: Gradients = []
        for layer, (x, z) in zip(reversed(self.layers), reversed(cache)):
            grad_z = grad_out * (z > 0) if layer.activation == Activation.RELU else grad_out
            grads.append((x.T @ grad_z, grad_z.sum(axis=0)))
            grad_out = grad_z @ layer.weights.T
        grads.reverse()
        return grad_out, grads

    def apply(self, grads: Gradients, learning_rate: float) -> ModelPart:
        return ModelPart([DenseLayer(layer.weights - learning_rate * gw, layer.biases - learning_rate * gb,
                                     layer.activation)
                          for layer, (gw, gb) in zip(self.layers, grads)])


class SplitModel:
    """
    Dense network cut in two: layers ``[0, cut_index)`` run on the device, the rest on the edge server.
    """

    def __init__(self, layers: Sequence[DenseLayer], cut_index: int):
        if not 1 <= cut_index < len(layers):
            raise InvalidArgumentError(Messages.get_formatted("SplitModel.InvalidCut", cut_index, len(layers)))
        self.whole = ModelPart(layers)
        self.cut_index = cut_index

    @staticmethod
    def create(hidden_sizes: Sequence[int] = (128,), cut_index: int = 1, rng: Optional[np.random.Generator] = None,
               input_size: int = INPUT_SIZE, num_classes: int = NUM_CLASSES) -> SplitModel:
        """Relu hidden layers and a softmax output, initialized uniformly in +-1/sqrt(fan_in)."""
        rng = rng if rng is not None else np.random.default_rng(0)
        sizes = [input_size, *hidden_sizes, num_classes]
        layers = [DenseLayer.initialize(fan_in, fan_out,
                                        Activation.SOFTMAX if i == len(sizes) - 2 else Activation.RELU, rng)
                  for i, (fan_in, fan_out) in enumerate(zip(sizes, sizes[1:]))]
        return SplitModel(layers, cut_index)

    @staticmethod
    def from_parts(device_part: ModelPart, server_part: ModelPart) -> SplitModel:
        return SplitModel(device_part.layers + server_part.layers, len(device_part.layers))

    @property
    def layers(self) -> Tuple[DenseLayer, ...]:
        return self.whole.layers

    @property
    def device_part(self) -> ModelPart:
        return ModelPart(self.layers[:self.cut_index])

    @property
    def server_part(self) -> ModelPart:
        return ModelPart(self.layers[self.cut_index:])

    def parameters(self) -> List[np.ndarray]:
        return self.whole.parameters()

    def with_parameters(self, params: Sequence[np.ndarray]) -> SplitModel:
        return SplitModel(self.whole.with_parameters(params).layers, self.cut_index)

    def architecture(self) -> Tuple:
        return self.whole.architecture() + (self.cut_index,)


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray) -> Tuple[float, np.ndarray]:
    """Mean loss over the batch and its gradient with respect to the logits."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    n = len(labels)
    loss = -float(log_probs[np.arange(n), labels].mean())
    grad = np.exp(log_probs)
    grad[np.arange(n), labels] -= 1.0
    return loss, grad / n


def _check_batch(x: np.ndarray, labels: np.ndarray):
    if len(x) == 0:
        raise InvalidArgumentError(Messages.get("SplitModel.EmptyBatch"))
    if len(x) != len(labels):
        raise ShapeMismatchError(Messages.get_formatted("SplitModel.BatchMismatch", len(x), len(labels)))


def split_training_step(device_part: ModelPart, server_part: ModelPart, batch: Tuple[np.ndarray, np.ndarray],
                        learning_rate: float) -> Tuple[ModelPart, ModelPart, float]:
    """
    One SGD step of split learning. The device runs its layers up to the cut and sends the activations;
    the server finishes the forward pass, computes the loss and returns the gradient at the cut, which the
    device back-propagates through its own layers. Returns the updated parts and the loss before the update.
    """
    x, labels = batch
    x = np.asarray(x, dtype=np.float64)
    _check_batch(x, labels)
    if device_part.output_size != server_part.input_size:
        raise ShapeMismatchError(
            Messages.get_formatted("SplitModel.CutMismatch", device_part.output_size, server_part.input_size))

    activations, device_cache = device_part.forward(x)
    logits, server_cache = server_part.forward(activations)
    loss, grad_logits = softmax_cross_entropy(logits, labels)
    grad_cut, server_grads = server_part.backward(server_cache, grad_logits)
    _, device_grads = device_part.backward(device_cache, grad_cut)
    return device_part.apply(device_grads, learning_rate), server_part.apply(server_grads, learning_rate), loss


def loss_and_gradients(model: SplitModel, x: np.ndarray, labels: np.ndarray) -> Tuple[float, Gradients]:
    x = np.asarray(x, dtype=np.float64)
    _check_batch(x, labels)
    logits, cache = model.whole.forward(x)
    loss, grad_logits = softmax_cross_entropy(logits, labels)
    _, grads = model.whole.backward(cache, grad_logits)
    return loss, grads


def sgd_step(model: SplitModel, batch: Tuple[np.ndarray, np.ndarray], learning_rate: float) \
        -> Tuple[SplitModel, float]:
    """One SGD step on the uncut network."""
    loss, grads = loss_and_gradients(model, *batch)
    return SplitModel(model.whole.apply(grads, learning_rate).layers, model.cut_index), loss


def evaluate(model: SplitModel, images: np.ndarray, labels: np.ndarray, batch_size: int = 1000) \
        -> Tuple[float, float]:
    """(accuracy, mean cross-entropy) over a labelled set."""
    images = images.reshape(len(labels), -1)
    correct = 0
    total_loss = 0.0
    for start in range(0, len(labels), batch_size):
        x = np.asarray(images[start:start + batch_size], dtype=np.float64)
        y = labels[start:start + batch_size]
        logits, _ = model.whole.forward(x)
        loss, _ = softmax_cross_entropy(logits, y)
        total_loss += loss * len(y)
        correct += int((logits.argmax(axis=1) == y).sum())
    return correct / len(labels), total_loss / len(labels)
