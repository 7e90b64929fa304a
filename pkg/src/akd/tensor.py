"""Dense 2-D float64 tensors on an append-only reverse-mode tape.

Shapes are always explicit (rows x cols). The only implicit broadcast is
scalar-times-tensor (``scale``); anything per-row is written with explicit
matmuls against ones/constant matrices, so every backward rule is a plain
matrix identity.
"""

from __future__ import annotations

import numpy as np

from .errors import ContractError, NumericError, ParameterError, ShapeError


def _as_matrix(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, order="C")
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, -1)
    elif arr.ndim != 2:
        raise ShapeError(f"tensors are 2-D, got a {arr.ndim}-D input")
    return arr


def sigmoid_values(x: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function on a plain array."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax_values(logits: np.ndarray, temperature: float) -> np.ndarray:
    """Temperature softmax with per-row max subtraction."""
    if temperature <= 0:
        raise ParameterError(f"temperature must be positive, got {temperature}")
    logits = np.asarray(logits, dtype=np.float64)
    if not np.all(np.isfinite(logits)):
        raise NumericError("logits contain non-finite values")
    z = logits / float(temperature)
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


class Tensor:
    """A rows x cols value grid with a same-shape gradient slot.

    Leaves are built directly (``Tensor(values, requires_grad=...)``);
    interior tensors come out of Graph ops and carry a node_id. Gradients
    accumulate across backward calls; callers zero them between steps.
    """

    __slots__ = ("values", "grad", "node_id", "requires_grad", "graph")

    def __init__(self, values, requires_grad: bool = False):
        self.values = _as_matrix(values)
        self.grad = np.zeros_like(self.values)
        self.node_id = None
        self.requires_grad = bool(requires_grad)
        self.graph = None

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def item(self) -> float:
        if self.values.shape != (1, 1):
            raise ContractError(f"item() needs a 1x1 tensor, got {self.shape}")
        return float(self.values[0, 0])

    def detach(self) -> "Tensor":
        return Tensor(self.values.copy())

    def zero_grad(self) -> None:
        self.grad[:] = 0.0

    def __repr__(self) -> str:
        tag = "leaf" if self.node_id is None else f"node {self.node_id}"
        return f"Tensor({self.rows}x{self.cols}, {tag}, requires_grad={self.requires_grad})"


class ProbBatch:
    """Row-stochastic probabilities tagged with the temperature that made them."""

    __slots__ = ("probs", "temperature")

    def __init__(self, probs: Tensor, temperature: float):
        self.probs = probs
        self.temperature = float(temperature)

    @property
    def values(self) -> np.ndarray:
        return self.probs.values

    @property
    def rows(self) -> int:
        return self.probs.rows

    @property
    def cols(self) -> int:
        return self.probs.cols

    def __repr__(self) -> str:
        return f"ProbBatch({self.rows}x{self.cols}, T={self.temperature})"


class _Node:
    __slots__ = ("op", "out", "parents", "push")

    def __init__(self, op, out, parents, push):
        self.op = op
        self.out = out
        self.parents = parents
        self.push = push


class Graph:
    """Append-only computation tape; backward walks it once, in reverse.

    Construction order is topological by definition. One graph per training
    step; distinct graphs share nothing but leaf tensors.
    """

    def __init__(self):
        self._nodes: list[_Node] = []

    def __len__(self) -> int:
        return len(self._nodes)

    def _adopt(self, t: Tensor) -> None:
        if not isinstance(t, Tensor):
            raise ContractError(f"expected a Tensor, got {type(t).__name__}")
        if t.node_id is not None and t.graph is not self:
            raise ContractError("tensor was produced by a different graph")

    def _emit(self, op: str, values: np.ndarray, parents, push) -> Tensor:
        out = Tensor(values)
        out.graph = self
        out.node_id = len(self._nodes)
        out.requires_grad = any(p.requires_grad for p in parents)
        self._nodes.append(_Node(op, out, tuple(parents), push))
        return out

    # ---- binary / unary primitives -------------------------------------

    def add(self, a: Tensor, b: Tensor) -> Tensor:
        self._adopt(a)
        self._adopt(b)
        if a.shape != b.shape:
            raise ShapeError(f"add: {a.shape} vs {b.shape}")

        def push(g):
            if a.requires_grad:
                a.grad += g
            if b.requires_grad:
                b.grad += g

        return self._emit("add", a.values + b.values, (a, b), push)

    def sub(self, a: Tensor, b: Tensor) -> Tensor:
        self._adopt(a)
        self._adopt(b)
        if a.shape != b.shape:
            raise ShapeError(f"sub: {a.shape} vs {b.shape}")

        def push(g):
            if a.requires_grad:
                a.grad += g
            if b.requires_grad:
                b.grad -= g

        return self._emit("sub", a.values - b.values, (a, b), push)

    def scale(self, a: Tensor, s: float) -> Tensor:
        self._adopt(a)
        s = float(s)

        def push(g):
            if a.requires_grad:
                a.grad += s * g

        return self._emit("scale", s * a.values, (a,), push)

    def hadamard(self, a: Tensor, b: Tensor) -> Tensor:
        self._adopt(a)
        self._adopt(b)
        if a.shape != b.shape:
            raise ShapeError(f"hadamard: {a.shape} vs {b.shape}")

        def push(g):
            if a.requires_grad:
                a.grad += g * b.values
            if b.requires_grad:
                b.grad += g * a.values

        return self._emit("hadamard", a.values * b.values, (a, b), push)

    def matmul(self, a: Tensor, b: Tensor) -> Tensor:
        """Standard matrix product; backward is g @ b^T and a^T @ g."""
        self._adopt(a)
        self._adopt(b)
        if a.cols != b.rows:
            raise ShapeError(f"matmul: inner dimensions disagree, {a.shape} x {b.shape}")

        def push(g):
            if a.requires_grad:
                a.grad += g @ b.values.T
            if b.requires_grad:
                b.grad += a.values.T @ g

        return self._emit("matmul", a.values @ b.values, (a, b), push)

    def relu(self, a: Tensor) -> Tensor:
        self._adopt(a)

        def push(g):
            if a.requires_grad:
                a.grad += g * (a.values > 0.0)

        return self._emit("relu", np.maximum(a.values, 0.0), (a,), push)

    def log(self, a: Tensor) -> Tensor:
        self._adopt(a)
        if np.any(a.values <= 0.0):
            raise NumericError("log requires strictly positive values")

        def push(g):
            if a.requires_grad:
                a.grad += g / a.values

        return self._emit("log", np.log(a.values), (a,), push)

    def exp(self, a: Tensor) -> Tensor:
        self._adopt(a)
        out_vals = np.exp(a.values)

        def push(g):
            if a.requires_grad:
                a.grad += g * out_vals

        return self._emit("exp", out_vals, (a,), push)

    def abs(self, a: Tensor) -> Tensor:
        self._adopt(a)

        def push(g):
            if a.requires_grad:
                a.grad += g * np.sign(a.values)

        return self._emit("abs", np.abs(a.values), (a,), push)

    def sigmoid(self, a: Tensor) -> Tensor:
        self._adopt(a)
        out_vals = sigmoid_values(a.values)

        def push(g):
            if a.requires_grad:
                a.grad += g * out_vals * (1.0 - out_vals)

        return self._emit("sigmoid", out_vals, (a,), push)

    def recip(self, a: Tensor) -> Tensor:
        self._adopt(a)
        if np.any(a.values == 0.0):
            raise NumericError("recip requires nonzero values")
        out_vals = 1.0 / a.values

        def push(g):
            if a.requires_grad:
                a.grad -= g * out_vals * out_vals

        return self._emit("recip", out_vals, (a,), push)

    # ---- reductions / structure ----------------------------------------

    def row_sum(self, a: Tensor) -> Tensor:
        self._adopt(a)

        def push(g):
            if a.requires_grad:
                a.grad += g  # (b,1) broadcasts across columns

        return self._emit("row_sum", a.values.sum(axis=1, keepdims=True), (a,), push)

    def mean_all(self, a: Tensor) -> Tensor:
        self._adopt(a)
        size = a.rows * a.cols

        def push(g):
            if a.requires_grad:
                a.grad += g[0, 0] / size

        return self._emit("mean_all", np.array([[a.values.mean()]]), (a,), push)

    def concat_cols(self, parts) -> Tensor:
        parts = tuple(parts)
        if len(parts) < 2:
            raise ContractError("concat_cols needs at least two tensors")
        for p in parts:
            self._adopt(p)
        rows = parts[0].rows
        if any(p.rows != rows for p in parts):
            raise ShapeError("concat_cols: row counts disagree")
        offsets = np.cumsum([0] + [p.cols for p in parts])

        def push(g):
            for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
                if p.requires_grad:
                    p.grad += g[:, lo:hi]

        return self._emit("concat_cols", np.concatenate([p.values for p in parts], axis=1), parts, push)

    def softmax_t(self, logits: Tensor, temperature: float) -> ProbBatch:
        """Row-wise softmax of logits/temperature, with max subtraction.

        Backward applies the full softmax Jacobian including the 1/T factor.
        """
        self._adopt(logits)
        if logits.cols < 2:
            raise ShapeError(f"softmax needs at least 2 classes, got {logits.cols}")
        p = softmax_values(logits.values, temperature)
        t = float(temperature)

        def push(g):
            if logits.requires_grad:
                inner = np.sum(g * p, axis=1, keepdims=True)
                logits.grad += p * (g - inner) / t

        out = self._emit("softmax_t", p, (logits,), push)
        return ProbBatch(out, t)

    # ---- reverse pass ----------------------------------------------------

    def backward(self, loss: Tensor) -> None:
        """Propagate d(loss)/d(leaf) into every requires_grad leaf.

        Visits nodes in strict reverse insertion order exactly once. Repeated
        calls accumulate into leaf gradients; interior gradients are reset at
        the start of each call.
        """
        if not isinstance(loss, Tensor) or loss.shape != (1, 1):
            raise ContractError("backward expects a 1x1 loss tensor")
        if loss.node_id is None or loss.graph is not self:
            raise ContractError("loss does not belong to this graph")
        for node in self._nodes:
            node.out.grad[:] = 0.0
        loss.grad[0, 0] = 1.0
        for node in reversed(self._nodes):
            if node.out.requires_grad:
                node.push(node.out.grad)


def grad_check(f, x: Tensor, eps: float = 1e-5) -> float:
    """Max relative error between backward() and central finite differences.

    ``f(graph, tensor) -> 1x1 Tensor`` must be deterministic. Per-entry error
    is |analytic - numeric| / max(1, |analytic|).
    """
    if not (1e-7 <= eps <= 1e-3):
        raise ParameterError(f"eps must be in [1e-7, 1e-3], got {eps}")
    g = Graph()
    probe = Tensor(x.values.copy(), requires_grad=True)
    out = f(g, probe)
    if not isinstance(out, Tensor) or out.shape != (1, 1):
        raise ContractError("grad_check: f must return a 1x1 tensor")
    g.backward(out)
    analytic = probe.grad.copy()

    def eval_at(vals: np.ndarray) -> float:
        return f(Graph(), Tensor(vals)).item()

    numeric = np.zeros_like(analytic)
    base = x.values
    for i in range(base.shape[0]):
        for j in range(base.shape[1]):
            up = base.copy()
            up[i, j] += eps
            down = base.copy()
            down[i, j] -= eps
            numeric[i, j] = (eval_at(up) - eval_at(down)) / (2.0 * eps)
    rel = np.abs(analytic - numeric) / np.maximum(1.0, np.abs(analytic))
    return float(rel.max())
