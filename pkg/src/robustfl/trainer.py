"""Client-side model: a ReLU multilayer perceptron with a softmax
cross-entropy head, trained by plain mini-batch SGD on flat parameter
vectors. Also hosts server-side evaluation.

Parameter layout inside the flat vector, for each layer ``i`` in order:
the weight matrix of shape ``(fan_in, fan_out)`` raveled row-major, followed
by the bias of shape ``(fan_out,)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import LabeledDataset
from .errors import DimensionMismatch, EmptyInput, InvalidParam, NonFiniteResult
from .param_space import ParamVector, flatten, unflatten


@dataclass(frozen=True)
class ModelSpec:
    layer_sizes: tuple
    activation: str = "relu"

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        if len(sizes) < 2 or any(s < 1 for s in sizes):
            raise InvalidParam("layer_sizes needs >= 2 positive entries")
        if self.activation != "relu":
            raise InvalidParam(f"unsupported activation {self.activation!r}")
        object.__setattr__(self, "layer_sizes", sizes)

    @property
    def shapes(self) -> list[tuple]:
        out = []
        for fan_in, fan_out in zip(self.layer_sizes[:-1], self.layer_sizes[1:]):
            out.append((fan_in, fan_out))
            out.append((fan_out,))
        return out

    @property
    def dim(self) -> int:
        return sum(int(np.prod(s)) for s in self.shapes)

    def check_data(self, data: LabeledDataset) -> None:
        if data.n_features != self.layer_sizes[0]:
            raise DimensionMismatch(
                f"model expects {self.layer_sizes[0]} features, data has {data.n_features}")
        if data.num_classes != self.layer_sizes[-1]:
            raise DimensionMismatch(
                f"model has {self.layer_sizes[-1]} outputs, data has {data.num_classes} classes")


@dataclass(frozen=True)
class TrainConfig:
    """``local_iterations`` counts mini-batch gradient steps."""

    local_iterations: int = 3
    batch_size: int = 32
    learning_rate: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.local_iterations < 1:
            raise InvalidParam("local_iterations must be >= 1")
        if self.batch_size < 1:
            raise InvalidParam("batch_size must be >= 1")
        if not self.learning_rate > 0:
            raise InvalidParam("learning_rate must be > 0")


def init_params(spec: ModelSpec, seed: int) -> ParamVector:
    """He-normal weights (std ``sqrt(2 / fan_in)``), zero biases."""
    rng = np.random.default_rng(seed)
    arrays = []
    for shape in spec.shapes:
        if len(shape) == 2:
            arrays.append(rng.standard_normal(shape) * np.sqrt(2.0 / shape[0]))
        else:
            arrays.append(np.zeros(shape))
    return flatten(arrays)


def _layers(params: ParamVector, spec: ModelSpec):
    params = np.asarray(params, dtype=np.float64)
    if params.shape != (spec.dim,):
        raise DimensionMismatch(f"model dim is {spec.dim}, got {params.size}")
    arrays = unflatten(params, spec.shapes)
    return list(zip(arrays[0::2], arrays[1::2]))


def logits(params: ParamVector, spec: ModelSpec, x: np.ndarray) -> np.ndarray:
    layers = _layers(params, spec)
    a = x
    for i, (w, b) in enumerate(layers):
        a = a @ w + b
        if i < len(layers) - 1:
            a = np.maximum(a, 0.0)
    return a


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _cross_entropy(z: np.ndarray, y: np.ndarray) -> float:
    z = z - z.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1))
    return float(np.mean(log_norm - z[np.arange(y.size), y]))


def loss(params: ParamVector, spec: ModelSpec, data: LabeledDataset) -> float:
    """Mean cross-entropy over ``data``."""
    spec.check_data(data)
    if len(data) == 0:
        raise EmptyInput("empty dataset")
    with np.errstate(all="ignore"):
        return _cross_entropy(logits(params, spec, data.features), data.labels)


def loss_and_grad(params: ParamVector, spec: ModelSpec, x: np.ndarray,
                  y: np.ndarray) -> tuple[float, ParamVector]:
    """Mean cross-entropy on the batch ``(x, y)`` and its flat gradient."""
    layers = _layers(params, spec)
    acts = [x]
    a = x
    for i, (w, b) in enumerate(layers):
        a = a @ w + b
        if i < len(layers) - 1:
            a = np.maximum(a, 0.0)
        acts.append(a)
    z = acts[-1]
    value = _cross_entropy(z, y)

    grad = np.empty(spec.dim)
    grads = unflatten(grad, spec.shapes)
    delta = _softmax(z)
    delta[np.arange(y.size), y] -= 1.0
    delta /= y.size
    for i in range(len(layers) - 1, -1, -1):
        w, _ = layers[i]
        grads[2 * i][...] = acts[i].T @ delta
        grads[2 * i + 1][...] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ w.T) * (acts[i] > 0)
    return value, grad


def batch_schedule(n: int, batch_size: int, steps: int, seed: int):
    """Index arrays for ``steps`` mini-batches over ``n`` samples.

    Batches walk through a fresh seeded permutation per pass; a pass ends
    with a short batch when ``batch_size`` does not divide ``n``.
    """
    rng = np.random.default_rng(seed)
    bs = min(batch_size, n)
    done = 0
    while done < steps:
        order = rng.permutation(n)
        for lo in range(0, n, bs):
            if done == steps:
                return
            yield order[lo:lo + bs]
            done += 1


def sgd_train(start: ParamVector, spec: ModelSpec, data: LabeledDataset,
              cfg: TrainConfig) -> ParamVector:
    """Take exactly ``cfg.local_iterations`` mini-batch SGD steps from ``start``.

    Batch order comes from ``cfg.seed`` alone, so the result is a pure
    function of the arguments. A non-finite loss or parameter raises
    NonFiniteResult instead of returning a diverged model.
    """
    spec.check_data(data)
    n = len(data)
    if n == 0:
        raise EmptyInput("cannot train on an empty dataset")
    params = np.array(start, dtype=np.float64)
    if params.shape != (spec.dim,):
        raise DimensionMismatch(f"model dim is {spec.dim}, got {params.size}")
    with np.errstate(all="ignore"):
        for idx in batch_schedule(n, cfg.batch_size, cfg.local_iterations, cfg.seed):
            value, grad = loss_and_grad(params, spec, data.features[idx], data.labels[idx])
            if not np.isfinite(value):
                raise NonFiniteResult("training loss diverged")
            params -= cfg.learning_rate * grad
        if not np.all(np.isfinite(params)):
            raise NonFiniteResult("parameters diverged during training")
    return params


def predict(params: ParamVector, spec: ModelSpec, x: np.ndarray) -> np.ndarray:
    # argmax picks the first maximum, i.e. ties go to the smallest class index
    with np.errstate(all="ignore"):
        return np.argmax(logits(params, spec, x), axis=1)


def evaluate(params: ParamVector, spec: ModelSpec, test: LabeledDataset) -> float:
    """Top-1 accuracy on ``test``."""
    if len(test) == 0:
        raise EmptyInput("empty test set")
    spec.check_data(test)
    return float(np.mean(predict(params, spec, test.features) == test.labels))
