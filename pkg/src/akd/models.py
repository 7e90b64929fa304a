"""Fully-connected classifiers and the two optimizers used to fit them.

Teacher and student share the same architecture family; the capacity gap
comes from layer widths. Losses apply the softmax, so the forward pass ends
on raw logits.
"""

from __future__ import annotations

import numpy as np

from . import checkpoint
from .errors import ConfigError, ContractError, ParameterError, ShapeError
from .losses import cross_entropy
from .tensor import Graph, Tensor


class MlpModel:
    """Affine-relu stack ending in an affine layer (logits out)."""

    def __init__(self, weights, biases):
        if len(weights) != len(biases) or not weights:
            raise ContractError("weights and biases must be non-empty and aligned")
        self.weights = list(weights)
        self.biases = list(biases)
        self.widths = [weights[0].rows] + [w.cols for w in weights]

    @classmethod
    def initialize(cls, widths, rng, requires_grad: bool = True) -> "MlpModel":
        """Fan-in-scaled uniform weights, zero biases."""
        widths = [int(w) for w in widths]
        if len(widths) < 2 or any(w < 1 for w in widths):
            raise ParameterError(f"widths must be >= 2 positive entries, got {widths}")
        weights, biases = [], []
        for fan_in, fan_out in zip(widths[:-1], widths[1:]):
            lim = 1.0 / np.sqrt(fan_in)
            weights.append(Tensor(rng.uniform(-lim, lim, (fan_in, fan_out)), requires_grad=requires_grad))
            biases.append(Tensor(np.zeros((1, fan_out)), requires_grad=requires_grad))
        return cls(weights, biases)

    def forward(self, g: Graph, x: Tensor) -> Tensor:
        if x.cols != self.widths[0]:
            raise ShapeError(f"input width {x.cols}, model expects {self.widths[0]}")
        ones = Tensor(np.ones((x.rows, 1)))
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = g.add(g.matmul(h, w), g.matmul(ones, b))
            if i != last:
                h = g.relu(h)
        return h

    def forward_values(self, x: np.ndarray) -> np.ndarray:
        """Graph-free forward pass for frozen models and evaluation."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape[1] != self.widths[0]:
            raise ShapeError(f"input width {x.shape[1]}, model expects {self.widths[0]}")
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w.values + b.values
            if i != last:
                h = np.maximum(h, 0.0)
        return h

    def params(self):
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def zero_grads(self) -> None:
        for p in self.params():
            p.zero_grad()

    def param_count(self) -> int:
        return sum(p.values.size for p in self.params())

    def save(self, path) -> None:
        checkpoint.save_layers(path, [(w.values, b.values[0]) for w, b in zip(self.weights, self.biases)])

    @classmethod
    def load(cls, path, requires_grad: bool = False) -> "MlpModel":
        layers = checkpoint.load_layers(path)
        weights = [Tensor(w, requires_grad=requires_grad) for w, _ in layers]
        biases = [Tensor(b.reshape(1, -1), requires_grad=requires_grad) for _, b in layers]
        return cls(weights, biases)


def accuracy(model: MlpModel, features: np.ndarray, labels: np.ndarray) -> float:
    preds = np.argmax(model.forward_values(features), axis=1)
    return float(np.mean(preds == np.asarray(labels)))


class _OptimizerBase:
    def __init__(self, params, lr: float):
        if lr <= 0:
            raise ParameterError(f"learning rate must be positive, got {lr}")
        params = list(params)
        if not params:
            raise ContractError("optimizer needs at least one parameter")
        for p in params:
            if not p.requires_grad:
                raise ContractError("optimizer parameters must have requires_grad set")
        self.lr = float(lr)
        self._params = params
        self._index = {id(p): i for i, p in enumerate(params)}

    def _targets(self, params):
        if params is None:
            return range(len(self._params))
        out = []
        for p in params:
            i = self._index.get(id(p))
            if i is None:
                raise ContractError("parameter not registered with this optimizer")
            out.append(i)
        return out

    def zero_grads(self) -> None:
        for p in self._params:
            p.zero_grad()


class SgdOptimizer(_OptimizerBase):
    """v <- grad + momentum * v; p <- p - lr * v."""

    def __init__(self, params, lr: float, momentum: float = 0.0):
        super().__init__(params, lr)
        if momentum < 0:
            raise ParameterError(f"momentum must be non-negative, got {momentum}")
        self.momentum = float(momentum)
        self._velocity = [np.zeros_like(p.values) for p in self._params]

    def step(self, params=None) -> None:
        for i in self._targets(params):
            p = self._params[i]
            v = self._velocity[i]
            if v.shape != p.values.shape:
                raise ContractError(f"velocity shape {v.shape} no longer matches parameter {p.values.shape}")
            v *= self.momentum
            v += p.grad
            p.values -= self.lr * v


class AdamOptimizer(_OptimizerBase):
    """Adam with bias correction; step count advances once per apply."""

    def __init__(self, params, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        super().__init__(params, lr)
        if not (0.0 <= beta1 < 1.0 and 0.0 <= beta2 < 1.0):
            raise ParameterError(f"betas must lie in [0, 1), got {beta1}, {beta2}")
        if eps <= 0:
            raise ParameterError(f"eps must be positive, got {eps}")
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.step_count = 0
        self._m = [np.zeros_like(p.values) for p in self._params]
        self._v = [np.zeros_like(p.values) for p in self._params]

    def step(self, params=None) -> None:
        self.step_count += 1
        c1 = 1.0 - self.beta1**self.step_count
        c2 = 1.0 - self.beta2**self.step_count
        for i in self._targets(params):
            p = self._params[i]
            m, v = self._m[i], self._v[i]
            if m.shape != p.values.shape or v.shape != p.values.shape:
                raise ContractError(f"moment shape {m.shape} no longer matches parameter {p.values.shape}")
            m *= self.beta1
            m += (1.0 - self.beta1) * p.grad
            v *= self.beta2
            v += (1.0 - self.beta2) * p.grad * p.grad
            p.values -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def make_optimizer(kind: str, params, lr: float, momentum: float = 0.9,
                   beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
    if kind == "sgd":
        return SgdOptimizer(params, lr=lr, momentum=momentum)
    if kind == "adam":
        return AdamOptimizer(params, lr=lr, beta1=beta1, beta2=beta2, eps=eps)
    raise ParameterError(f"unknown optimizer kind {kind!r}")


def train_teacher(dataset, widths, epochs: int, batch_size: int, optimizer_spec: dict,
                  init_rng, shuffle_rng, checkpoint_path=None):
    """Fit a classifier with plain cross-entropy; returns (model, val accuracy).

    An epoch budget of zero returns the freshly initialized model. The
    checkpoint, when a path is given, is written after training.
    """
    widths = [int(w) for w in widths]
    if epochs < 0:
        raise ParameterError(f"epochs must be non-negative, got {epochs}")
    if batch_size < 1:
        raise ParameterError(f"batch_size must be at least 1, got {batch_size}")
    if widths[0] != dataset.d or widths[-1] != dataset.classes:
        raise ConfigError(
            f"widths {widths} do not fit dataset with {dataset.d} features and {dataset.classes} classes"
        )
    model = MlpModel.initialize(widths, init_rng)
    opt = make_optimizer(params=model.params(), **optimizer_spec)
    x_tr = dataset.train_features
    y_tr = dataset.train_labels
    n = x_tr.shape[0]
    for _ in range(epochs):
        perm = shuffle_rng.permutation(n)
        for start in range(0, n, batch_size):
            idx = perm[start : start + batch_size]
            g = Graph()
            logits = model.forward(g, Tensor(x_tr[idx]))
            loss = g.mean_all(cross_entropy(g, logits, y_tr[idx]))
            g.backward(loss)
            opt.step()
            opt.zero_grads()
    val_acc = accuracy(model, dataset.val_features, dataset.val_labels)
    if checkpoint_path is not None:
        model.save(checkpoint_path)
    return model, val_acc
