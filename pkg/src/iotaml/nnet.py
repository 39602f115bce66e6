"""Dense feedforward classifier trained from scratch with backpropagation.

The same network type backs the transmitter's channel-state classifier and the
adversary's ACK predictor; they differ only in training data.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np


class DimensionError(ValueError):
    def __init__(self, expected: int, actual: int):
        super().__init__(f"expected feature vector of length {expected}, got {actual}")
        self.expected = expected
        self.actual = actual


@dataclass
class Hyperparams:
    learning_rate: float = 0.01
    hidden_layers: int = 3
    neurons_per_layer: int = 100
    batch_size: int = 100
    training_steps: int = 1000
    decision_threshold: float = 0.5

    def validate(self, n_samples: Optional[int] = None) -> None:
        if not self.learning_rate >= 0 or not np.isfinite(self.learning_rate):
            # learning_rate == 0 is accepted: it is a useful no-op for testing
            raise ValueError(f"learning_rate must be >= 0, got {self.learning_rate}")
        for name in ("hidden_layers", "neurons_per_layer", "batch_size", "training_steps"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v}")
        if not 0.0 < self.decision_threshold < 1.0:
            raise ValueError(f"decision_threshold must be in (0,1), got {self.decision_threshold}")
        if n_samples is not None and self.batch_size > n_samples:
            raise ValueError(
                f"batch_size {self.batch_size} exceeds training-set size {n_samples}")


DEFAULT_LEARNING_RATES = (0.1, 0.03, 0.01)


def default_grid(**overrides) -> List[Hyperparams]:
    return [Hyperparams(learning_rate=lr, **overrides) for lr in DEFAULT_LEARNING_RATES]


@dataclass
class Dataset:
    """Windowed feature vectors with binary labels."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2:
            raise ValueError("features must be a 2-D array (samples x n_new)")
        if len(self.labels) != len(self.features):
            raise ValueError("features and labels differ in length")
        if len(self.labels) and not np.isin(self.labels, (0, 1)).all():
            raise ValueError("labels must be 0 or 1")

    @property
    def n_new(self) -> int:
        return self.features.shape[1]

    def __len__(self) -> int:
        return len(self.labels)

    def __getitem__(self, idx) -> "Dataset":
        return Dataset(self.features[idx], self.labels[idx])

    def has_both_labels(self) -> bool:
        return bool(np.any(self.labels == 0) and np.any(self.labels == 1))

    @staticmethod
    def concat(parts: Sequence["Dataset"]) -> "Dataset":
        parts = [p for p in parts if len(p)]
        if not parts:
            raise ValueError("nothing to concatenate")
        return Dataset(np.concatenate([p.features for p in parts]),
                       np.concatenate([p.labels for p in parts]))

    def split(self, validation_fraction: float) -> Tuple["Dataset", "Dataset"]:
        """Contiguous head/tail split (windows are time-ordered)."""
        n_val = max(1, int(round(len(self) * validation_fraction)))
        return self[: len(self) - n_val], self[len(self) - n_val:]


@dataclass
class DenseNet:
    layer_sizes: List[int]
    weights: List[np.ndarray]
    biases: List[np.ndarray]
    hidden_activation: str = "relu"
    output_activation: str = "softmax"

    def __post_init__(self):
        if len(self.layer_sizes) < 2 or self.layer_sizes[-1] != 2:
            raise ValueError("layer_sizes must end with 2 output units")
        if len(self.weights) != len(self.layer_sizes) - 1 or len(self.biases) != len(self.weights):
            raise ValueError("one weight matrix and bias vector per layer transition")
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (self.layer_sizes[k + 1], self.layer_sizes[k]):
                raise ValueError(f"weights[{k}] has shape {w.shape}")
            if b.shape != (self.layer_sizes[k + 1],):
                raise ValueError(f"biases[{k}] has shape {b.shape}")

    @classmethod
    def create(cls, n_inputs: int, hidden_layers: int = 3, neurons_per_layer: int = 100,
               rng: Optional[np.random.Generator] = None) -> "DenseNet":
        """Glorot-uniform weights, zero biases."""
        if rng is None:
            rng = np.random.default_rng()
        sizes = [n_inputs] + [neurons_per_layer] * hidden_layers + [2]
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            r = np.sqrt(6.0 / (fan_in + fan_out))
            weights.append(rng.uniform(-r, r, size=(fan_out, fan_in)))
            biases.append(np.zeros(fan_out))
        return cls(sizes, weights, biases)

    @classmethod
    def zeros(cls, layer_sizes: Sequence[int]) -> "DenseNet":
        sizes = list(layer_sizes)
        return cls(sizes,
                   [np.zeros((o, i)) for i, o in zip(sizes[:-1], sizes[1:])],
                   [np.zeros(o) for o in sizes[1:]])

    @property
    def n_inputs(self) -> int:
        return self.layer_sizes[0]

    def copy(self) -> "DenseNet":
        return copy.deepcopy(self)

    def params(self) -> List[np.ndarray]:
        return [*self.weights, *self.biases]


def relu(x):
    return np.maximum(x, 0.0)


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _check_width(net: DenseNet, x: np.ndarray) -> None:
    if x.shape[-1] != net.n_inputs:
        raise DimensionError(net.n_inputs, x.shape[-1])


def _forward_cached(net: DenseNet, X: np.ndarray):
    acts = [X]
    pre = []
    a = X
    last = len(net.weights) - 1
    for k, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = a @ w.T + b
        pre.append(z)
        a = softmax(z) if k == last else relu(z)
        acts.append(a)
    return pre, acts


def forward(net: DenseNet, features) -> np.ndarray:
    """Class probabilities for one feature vector (shape (2,)) or a batch (N, 2)."""
    x = np.asarray(features, dtype=np.float64)
    _check_width(net, x)
    return _forward_cached(net, np.atleast_2d(x))[1][-1].reshape(x.shape[:-1] + (2,))


def scores(net: DenseNet, X) -> np.ndarray:
    """Probability of class 1 for each row of X."""
    return forward(net, np.atleast_2d(X))[:, 1]


def loss_and_gradient(net: DenseNet, batch: Dataset):
    """Mean cross-entropy and its exact gradient.

    Returns ``(loss, (grad_weights, grad_biases))`` with gradients shaped like
    ``net.weights`` / ``net.biases``.
    """
    if len(batch) == 0:
        raise ValueError("empty batch")
    X, y = batch.features, batch.labels
    _check_width(net, X)
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be binary")
    return _loss_grad(net, X, y)


def _loss_grad(net: DenseNet, X: np.ndarray, y: np.ndarray):
    n = len(y)
    pre, acts = _forward_cached(net, X)
    probs = acts[-1]
    p_true = probs[np.arange(n), y]
    loss = float(-np.mean(np.log(np.maximum(p_true, 1e-300))))

    delta = probs.copy()
    delta[np.arange(n), y] -= 1.0
    delta /= n
    gw = [None] * len(net.weights)
    gb = [None] * len(net.biases)
    for k in range(len(net.weights) - 1, -1, -1):
        gw[k] = delta.T @ acts[k]
        gb[k] = delta.sum(axis=0)
        if k:
            delta = (delta @ net.weights[k]) * (pre[k - 1] > 0)
    return loss, (gw, gb)


def mean_loss(net: DenseNet, data: Dataset) -> float:
    probs = forward(net, data.features)
    p = probs[np.arange(len(data)), data.labels]
    return float(-np.mean(np.log(np.maximum(p, 1e-300))))


def train(net: DenseNet, data: Dataset, h: Hyperparams, rng: np.random.Generator):
    """Minibatch gradient descent; batches drawn uniformly with replacement.

    Returns a new trained network and the per-step minibatch loss trace; the
    input network is left untouched.
    """
    if len(data) == 0:
        raise ValueError("empty training set")
    h.validate(len(data))
    _check_width(net, data.features)
    out = net.copy()
    trace = np.empty(h.training_steps)
    n = len(data)
    for step in range(h.training_steps):
        idx = rng.integers(0, n, size=h.batch_size)
        loss, (gw, gb) = _loss_grad(out, data.features[idx], data.labels[idx])
        trace[step] = loss
        if h.learning_rate == 0:
            continue
        for w, g in zip(out.weights, gw):
            w -= h.learning_rate * g
        for b, g in zip(out.biases, gb):
            b -= h.learning_rate * g
    return out, trace


def classify(net: DenseNet, features, tau: float = 0.5) -> Tuple[int, float]:
    """Label 0 iff the class-1 probability S is <= tau."""
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must be in (0,1), got {tau}")
    s = float(forward(net, features)[1])
    return (0 if s <= tau else 1), s


def predict(net: DenseNet, X, tau: float = 0.5) -> np.ndarray:
    return (scores(net, X) > tau).astype(np.int64)


def error_rates(predicted: np.ndarray, labels: np.ndarray) -> Tuple[float, float]:
    """(false-alarm, misdetection) = (P[pred 1 | label 0], P[pred 0 | label 1])."""
    predicted = np.asarray(predicted)
    labels = np.asarray(labels)
    neg, pos = labels == 0, labels == 1
    if not neg.any() or not pos.any():
        raise ValueError("both labels are required to define the two error rates")
    return float(np.mean(predicted[neg] == 1)), float(np.mean(predicted[pos] == 0))


@dataclass
class SearchResult:
    hyperparams: Hyperparams
    net: DenseNet
    evaluated: List[Tuple[Hyperparams, float, float]] = field(default_factory=list)


def hyper_search(candidates: Sequence[Hyperparams], train_set: Dataset, validation: Dataset,
                 rng: np.random.Generator, init: Optional[DenseNet] = None) -> SearchResult:
    """Pick the candidate minimizing max(false alarm, misdetection) on validation.

    Ties go to the earliest candidate. When ``init`` is given every candidate
    warm-starts from it instead of a fresh initialization.
    """
    if not candidates:
        raise ValueError("no hyperparameter candidates")
    if not validation.has_both_labels():
        raise ValueError("validation set must contain both labels")
    for h in candidates:
        h.validate(len(train_set))
    best = None
    evaluated = []
    for h in candidates:
        if init is None:
            start = DenseNet.create(train_set.n_new, h.hidden_layers, h.neurons_per_layer, rng)
        else:
            start = init
        net, _ = train(start, train_set, h, rng)
        fa, md = error_rates(predict(net, validation.features, h.decision_threshold),
                             validation.labels)
        evaluated.append((h, fa, md))
        if best is None or max(fa, md) < best[0]:
            best = (max(fa, md), h, net)
    return SearchResult(best[1], best[2], evaluated)
