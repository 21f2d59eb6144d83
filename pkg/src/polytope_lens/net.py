"""Small piecewise-linear MLPs: evaluation, tracing, training and serialization.

All arithmetic is float64. Evaluation functions accept either a single vector
of shape ``(fan_in,)`` or a batch of shape ``(n, fan_in)``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InvalidInputError, NetworkFormatError, TrainingDivergedError

FORMAT_TAG = "polytope-lens-network"


class Activation(str, Enum):
    RELU = "relu"
    IDENTITY = "identity"

    def apply(self, z: np.ndarray) -> np.ndarray:
        if self is Activation.RELU:
            return np.maximum(z, 0.0)
        return z


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Layer:
    weights: np.ndarray
    bias: np.ndarray
    activation: Activation = Activation.RELU

    def __post_init__(self):
        w = _frozen(self.weights)
        b = _frozen(self.bias)
        if w.ndim != 2:
            raise NetworkFormatError(f"weights must be 2-D, got shape {w.shape}")
        if b.ndim != 1 or b.shape[0] != w.shape[0]:
            raise NetworkFormatError(
                f"bias length {b.shape} does not match weight rows {w.shape[0]}"
            )
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise NetworkFormatError("non-finite parameter")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)
        object.__setattr__(self, "activation", Activation(self.activation))

    @property
    def fan_in(self) -> int:
        return self.weights.shape[1]

    @property
    def fan_out(self) -> int:
        return self.weights.shape[0]

    @property
    def is_relu(self) -> bool:
        return self.activation is Activation.RELU

    def preactivation(self, x: np.ndarray) -> np.ndarray:
        return x @ self.weights.T + self.bias


@dataclass(frozen=True, eq=False)
class PwlNetwork:
    layers: tuple[Layer, ...]

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise NetworkFormatError("network has no layers")
        for i in range(1, len(layers)):
            if layers[i].fan_in != layers[i - 1].fan_out:
                raise NetworkFormatError(
                    f"layer {i}: fan_in {layers[i].fan_in} != previous fan_out "
                    f"{layers[i - 1].fan_out}"
                )
        if layers[-1].activation is not Activation.IDENTITY:
            raise NetworkFormatError("final layer must use identity activation")
        object.__setattr__(self, "layers", layers)

    def __len__(self) -> int:
        return len(self.layers)

    @property
    def input_dim(self) -> int:
        return self.layers[0].fan_in

    @property
    def output_dim(self) -> int:
        return self.layers[-1].fan_out

    @property
    def sizes(self) -> list[int]:
        return [self.input_dim] + [layer.fan_out for layer in self.layers]

    def layer_input_dim(self, index: int) -> int:
        return self.layers[index].fan_in

    def same_parameters(self, other: "PwlNetwork") -> bool:
        if len(self) != len(other):
            return False
        return all(
            a.activation is b.activation
            and np.array_equal(a.weights, b.weights)
            and np.array_equal(a.bias, b.bias)
            for a, b in zip(self.layers, other.layers)
        )


@dataclass(frozen=True, eq=False)
class ActivationTrace:
    """Pre- and post-activations of layers ``start_layer..`` for one input (or a batch).

    ``pre[j]``, ``post[j]`` and ``kinds[j]`` belong to network layer
    ``start_layer + j``.
    """

    input: np.ndarray
    pre: tuple[np.ndarray, ...]
    post: tuple[np.ndarray, ...]
    kinds: tuple[Activation, ...]
    start_layer: int = 0

    @property
    def stop_layer(self) -> int:
        return self.start_layer + len(self.pre)

    @property
    def output(self) -> np.ndarray:
        return self.post[-1]

    def layer_pre(self, layer_index: int) -> np.ndarray:
        j = layer_index - self.start_layer
        if not 0 <= j < len(self.pre):
            raise InvalidInputError(f"layer {layer_index} not covered by this trace")
        return self.pre[j]

    def layer_post(self, layer_index: int) -> np.ndarray:
        j = layer_index - self.start_layer
        if not 0 <= j < len(self.post):
            raise InvalidInputError(f"layer {layer_index} not covered by this trace")
        return self.post[j]

    def layer_input(self, layer_index: int) -> np.ndarray:
        if layer_index == self.start_layer:
            return self.input
        return self.layer_post(layer_index - 1)


def _as_input(x, dim: int) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim not in (1, 2) or arr.shape[-1] != dim:
        raise InvalidInputError(f"expected input of dimension {dim}, got shape {arr.shape}")
    return arr


def _run(net: PwlNetwork, start: int, h: np.ndarray) -> ActivationTrace:
    pre, post = [], []
    cur = h
    for layer in net.layers[start:]:
        z = layer.preactivation(cur)
        cur = layer.activation.apply(z)
        pre.append(z)
        post.append(cur)
    kinds = tuple(layer.activation for layer in net.layers[start:])
    return ActivationTrace(h, tuple(pre), tuple(post), kinds, start)


def forward(net: PwlNetwork, x) -> np.ndarray:
    """Logits of ``net`` at ``x``."""
    x = _as_input(x, net.input_dim)
    cur = x
    for layer in net.layers:
        cur = layer.activation.apply(layer.preactivation(cur))
    return cur


def forward_traced(net: PwlNetwork, x) -> ActivationTrace:
    return _run(net, 0, _as_input(x, net.input_dim))


def forward_from_layer(net: PwlNetwork, layer_index: int, h) -> tuple[np.ndarray, ActivationTrace]:
    """Evaluate layers ``layer_index..end`` on a hidden activation ``h``.

    ``h`` lives in the input space of ``layer_index`` (the post-activation of
    the layer before it). Returns the logits and the partial trace.
    """
    if not 0 <= layer_index < len(net):
        raise InvalidInputError(f"layer index {layer_index} out of range [0, {len(net)})")
    trace = _run(net, layer_index, _as_input(h, net.layer_input_dim(layer_index)))
    return trace.output, trace


def hidden_activation(net: PwlNetwork, layer_index: int, x) -> np.ndarray:
    """Input to layer ``layer_index`` when the network is fed ``x``."""
    if not 0 <= layer_index < len(net):
        raise InvalidInputError(f"layer index {layer_index} out of range [0, {len(net)})")
    cur = _as_input(x, net.input_dim)
    for layer in net.layers[:layer_index]:
        cur = layer.activation.apply(layer.preactivation(cur))
    return cur


def init_random(layer_sizes: Sequence[int], seed: int) -> PwlNetwork:
    """Uniform(+-sqrt(3/fan_in)) weights, zero biases, ReLU hidden layers, identity output."""
    sizes = [int(s) for s in layer_sizes]
    if len(sizes) < 2 or any(s <= 0 for s in sizes):
        raise InvalidInputError(f"need >= 2 positive layer sizes, got {list(layer_sizes)}")
    rng = np.random.default_rng(seed)
    layers = []
    for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        limit = math.sqrt(3.0 / fan_in)
        w = rng.uniform(-limit, limit, size=(fan_out, fan_in))
        act = Activation.IDENTITY if i == len(sizes) - 2 else Activation.RELU
        layers.append(Layer(w, np.zeros(fan_out), act))
    return PwlNetwork(tuple(layers))


# --------------------------------------------------------------------- data


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    points: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        pts = _frozen(self.points)
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise InvalidInputError(f"points must be a non-empty 2-D array, got {pts.shape}")
        lab = np.asarray(self.labels)
        if lab.shape != (pts.shape[0],):
            raise InvalidInputError("labels must be one per point")
        if not np.all(lab == np.round(lab)) or np.any(lab < 0):
            raise InvalidInputError("labels must be non-negative integers")
        lab = lab.astype(np.int64)
        if set(np.unique(lab).tolist()) != set(range(int(lab.max()) + 1)):
            raise InvalidInputError("labels must cover a contiguous range 0..k-1")
        lab.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", lab)

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def n_classes(self) -> int:
        return int(self.labels.max()) + 1


def make_blobs(k: int, n_per_class: int, dim: int, spread: float, seed: int,
               center_box: float = 10.0) -> LabeledDataset:
    """Isotropic Gaussian clusters with seeded centers.

    Centers are uniform in ``[-center_box, center_box]^dim``, redrawn from the
    same stream until every pair is at least ``center_box / 2`` apart. Points
    are ordered class by class.
    """
    if k < 2 or n_per_class < 1 or dim < 1 or not spread >= 0:
        raise InvalidInputError("make_blobs needs k >= 2, n_per_class >= 1, dim >= 1, spread >= 0")
    rng = np.random.default_rng(seed)
    min_sep = center_box / 2
    for _ in range(1000):
        centers = rng.uniform(-center_box, center_box, size=(k, dim))
        d = np.linalg.norm(centers[:, None] - centers[None], axis=-1)
        if d[np.triu_indices(k, 1)].min() >= min_sep:
            break
    else:
        raise InvalidInputError("could not place well-separated centers; increase center_box or dim")
    noise = rng.standard_normal((k, n_per_class, dim)) * spread
    points = (centers[:, None, :] + noise).reshape(k * n_per_class, dim)
    labels = np.repeat(np.arange(k), n_per_class)
    return LabeledDataset(points, labels)


def save_dataset(data: LabeledDataset, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{i}" for i in range(data.dim)] + ["label"])
        for p, lab in zip(data.points, data.labels):
            w.writerow([repr(float(v)) for v in p] + [int(lab)])


def load_dataset(path) -> LabeledDataset:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise InvalidInputError(f"{path}: dataset needs a header and at least one row")
    body = rows[1:]
    try:
        pts = np.array([[float(v) for v in r[:-1]] for r in body])
        labels = np.array([int(r[-1]) for r in body])
    except ValueError as exc:
        raise InvalidInputError(f"{path}: {exc}") from exc
    return LabeledDataset(pts, labels)


# ----------------------------------------------------------------- training


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.05
    epochs: int = 200
    batch_size: int = 32
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise InvalidInputError("learning_rate must be >= 0")
        if self.epochs < 1 or self.batch_size < 1:
            raise InvalidInputError("epochs and batch_size must be positive")


def _softmax_xent(logits: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    shifted = logits - logits.max(axis=1, keepdims=True)
    logz = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    logp = shifted - logz
    n = logits.shape[0]
    loss = -float(logp[np.arange(n), y].mean())
    grad = np.exp(logp)
    grad[np.arange(n), y] -= 1.0
    return loss, grad / n


def loss_and_gradients(net: PwlNetwork, X: np.ndarray, y: np.ndarray
                       ) -> tuple[float, list[tuple[np.ndarray, np.ndarray]]]:
    """Mean softmax cross-entropy and its gradient w.r.t. every (weights, bias)."""
    trace = forward_traced(net, np.atleast_2d(X))
    loss, delta = _softmax_xent(trace.output, np.asarray(y))
    grads = [None] * len(net)
    for i in range(len(net) - 1, -1, -1):
        layer = net.layers[i]
        if layer.is_relu:
            delta = delta * (trace.pre[i] > 0)
        inp = trace.layer_input(i)
        grads[i] = (delta.T @ inp, delta.sum(axis=0))
        delta = delta @ layer.weights
    return loss, grads


def _check_labels(net: PwlNetwork, data: LabeledDataset) -> None:
    if data.dim != net.input_dim:
        raise InvalidInputError(f"data dimension {data.dim} != network input {net.input_dim}")
    if data.labels.max() >= net.output_dim:
        raise InvalidInputError(
            f"label {int(data.labels.max())} out of range for {net.output_dim} outputs"
        )


def train(net: PwlNetwork, data: LabeledDataset, cfg: TrainConfig
          ) -> tuple[PwlNetwork, list[float]]:
    """Minibatch SGD on softmax cross-entropy.

    Batches are reshuffled each epoch from a generator seeded with ``cfg.seed``.
    The recorded loss is the full-dataset mean loss after each epoch.
    """
    _check_labels(net, data)
    rng = np.random.default_rng(cfg.seed)
    params = [(l.weights.copy(), l.bias.copy()) for l in net.layers]
    acts = [l.activation for l in net.layers]

    def build() -> PwlNetwork:
        return PwlNetwork(tuple(Layer(w, b, a) for (w, b), a in zip(params, acts)))

    X, y = data.points, data.labels
    history: list[float] = []
    current = net
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(data))
        for start in range(0, len(order), cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            _, grads = loss_and_gradients(current, X[idx], y[idx])
            for (w, b), (gw, gb) in zip(params, grads):
                w -= cfg.learning_rate * gw
                b -= cfg.learning_rate * gb
            if not all(np.all(np.isfinite(w)) for w, _ in params):
                raise TrainingDivergedError(f"non-finite weights in epoch {epoch}")
            current = build()
        loss, _ = _softmax_xent(forward(current, X), y)
        if not math.isfinite(loss):
            raise TrainingDivergedError(f"loss became {loss} in epoch {epoch}")
        history.append(loss)
    return current, history


def accuracy(net: PwlNetwork, data: LabeledDataset) -> float:
    return float(np.mean(np.argmax(forward(net, data.points), axis=1) == data.labels))


# ------------------------------------------------------------ serialization


def network_to_dict(net: PwlNetwork) -> dict:
    return {
        "format": FORMAT_TAG,
        "version": 1,
        "layers": [
            {
                "weights": layer.weights.tolist(),
                "bias": layer.bias.tolist(),
                "activation": layer.activation.value,
            }
            for layer in net.layers
        ],
    }


def network_from_dict(doc) -> PwlNetwork:
    if not isinstance(doc, dict) or not isinstance(doc.get("layers"), list):
        raise NetworkFormatError("expected an object with a 'layers' list")
    layers = []
    for i, entry in enumerate(doc["layers"]):
        where = f"layers[{i}]"
        if not isinstance(entry, dict):
            raise NetworkFormatError(f"{where}: expected an object")
        for key in ("weights", "bias"):
            if key not in entry:
                raise NetworkFormatError(f"{where}.{key}: missing")
        try:
            w = np.array(entry["weights"], dtype=np.float64)
        except (TypeError, ValueError) as exc:
            raise NetworkFormatError(f"{where}.weights: {exc}") from exc
        try:
            b = np.array(entry["bias"], dtype=np.float64)
        except (TypeError, ValueError) as exc:
            raise NetworkFormatError(f"{where}.bias: {exc}") from exc
        try:
            act = Activation(entry.get("activation", "relu"))
        except ValueError:
            raise NetworkFormatError(
                f"{where}.activation: unknown activation {entry.get('activation')!r}"
            ) from None
        if w.ndim != 2:
            raise NetworkFormatError(f"{where}.weights: expected a 2-D array, got shape {w.shape}")
        if b.shape != (w.shape[0],):
            raise NetworkFormatError(
                f"{where}.bias: length {b.size} does not match {w.shape[0]} weight rows"
            )
        try:
            layers.append(Layer(w, b, act))
        except NetworkFormatError as exc:
            raise NetworkFormatError(f"{where}: {exc}") from exc
    return PwlNetwork(tuple(layers))


def save_network(net: PwlNetwork, path) -> None:
    # json writes floats with repr(), which round-trips float64 exactly
    Path(path).write_text(json.dumps(network_to_dict(net), indent=1) + "\n")


def load_network(path) -> PwlNetwork:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise NetworkFormatError(f"{path}: line {exc.lineno} col {exc.colno}: {exc.msg}") from exc
    return network_from_dict(doc)
