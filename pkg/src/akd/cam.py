"""Class-wise attention over the teacher distribution.

A two-layer MLP reads both probability vectors plus their absolute gap and
emits a per-class weight in (0, 1); the teacher row is multiplied by those
weights and renormalized. With the output layer zero-initialized the
attention is exactly 0.5 everywhere and the reweighting is an exact no-op,
so training starts at plain distillation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, NumericError, ParameterError
from .losses import kd_kl
from .tensor import Graph, ProbBatch, Tensor, softmax_values


@dataclass
class CamParams:
    """Weights of the attention MLP: 3c -> h (relu) -> c (sigmoid)."""

    w1: Tensor
    b1: Tensor
    w2: Tensor
    b2: Tensor

    @property
    def classes(self) -> int:
        return self.w2.cols

    @property
    def hidden(self) -> int:
        return self.w1.cols

    def params(self):
        return [self.w1, self.b1, self.w2, self.b2]

    def zero_grads(self) -> None:
        for p in self.params():
            p.zero_grad()


def init_cam(classes: int, rng, hidden_multiplier: int = 4, zero_init_output: bool = True) -> CamParams:
    """Fan-in-scaled uniform first layer; output layer zeroed by default."""
    if classes < 2:
        raise ParameterError(f"need at least 2 classes, got {classes}")
    if hidden_multiplier < 1:
        raise ParameterError(f"hidden_multiplier must be at least 1, got {hidden_multiplier}")
    width_in = 3 * classes
    hidden = hidden_multiplier * classes
    lim1 = 1.0 / np.sqrt(width_in)
    w1 = Tensor(rng.uniform(-lim1, lim1, (width_in, hidden)), requires_grad=True)
    b1 = Tensor(np.zeros((1, hidden)), requires_grad=True)
    if zero_init_output:
        w2 = Tensor(np.zeros((hidden, classes)), requires_grad=True)
    else:
        lim2 = 1.0 / np.sqrt(hidden)
        w2 = Tensor(rng.uniform(-lim2, lim2, (hidden, classes)), requires_grad=True)
    b2 = Tensor(np.zeros((1, classes)), requires_grad=True)
    return CamParams(w1=w1, b1=b1, w2=w2, b2=b2)


@dataclass
class CamOutput:
    attention: Tensor
    reweighted_teacher: ProbBatch


def cam_attention(g: Graph, params: CamParams, p_s: ProbBatch, p_t: ProbBatch) -> Tensor:
    """Per-class attention in (0, 1) from [p_s, p_t, |p_s - p_t|].

    Both distributions enter as constants; gradients reach the MLP weights
    only, never the student through this path.
    """
    ps = p_s.values
    pt = p_t.values
    if ps.shape != pt.shape:
        raise ContractError(f"distribution shapes disagree: {ps.shape} vs {pt.shape}")
    b, c = ps.shape
    if 3 * c != params.w1.rows or c != params.classes:
        raise ContractError(
            f"params built for {params.classes} classes cannot take {c}-class input"
        )
    x = Tensor(np.concatenate([ps, pt, np.abs(ps - pt)], axis=1))
    ones = Tensor(np.ones((b, 1)))
    hidden = g.relu(g.add(g.matmul(x, params.w1), g.matmul(ones, params.b1)))
    return g.sigmoid(g.add(g.matmul(hidden, params.w2), g.matmul(ones, params.b2)))


def cam_reweight(g: Graph, attention: Tensor, p_t: ProbBatch) -> ProbBatch:
    """Renormalized attention * teacher per row; differentiable in attention.

    Invariant to positive per-row rescaling of the attention, so a
    row-constant attention leaves the teacher unchanged.
    """
    if attention.shape != p_t.values.shape:
        raise ContractError(f"attention {attention.shape} vs teacher {p_t.values.shape}")
    if np.any(attention.values <= 0.0):
        raise ContractError("attention entries must be strictly positive")
    c = attention.cols
    weighted = g.hadamard(attention, p_t.probs)
    totals = g.row_sum(weighted)
    dead = np.nonzero(totals.values[:, 0] < 1e-30)[0]
    if dead.size:
        raise NumericError(f"reweighted teacher row {dead[0]} sums below 1e-30")
    out = g.hadamard(weighted, g.matmul(g.recip(totals), Tensor(np.ones((1, c)))))
    return ProbBatch(out, p_t.temperature)


def cam_apply(g: Graph, params: CamParams, p_s: ProbBatch, p_t: ProbBatch) -> CamOutput:
    attention = cam_attention(g, params, p_s, p_t)
    return CamOutput(attention=attention, reweighted_teacher=cam_reweight(g, attention, p_t))


def cam_kd_loss(
    g: Graph,
    params: CamParams,
    student_logits: Tensor,
    teacher_logits: Tensor,
    temperature: float,
) -> Tensor:
    """Distillation KL against the attention-reweighted teacher (b x 1).

    Gradients flow jointly into the student logits (through the KL) and into
    the attention MLP (through the reweighted target). The student view fed
    to the attention MLP is detached.
    """
    p_t = ProbBatch(Tensor(softmax_values(teacher_logits.values, temperature)), temperature)
    p_s = ProbBatch(Tensor(softmax_values(student_logits.values, temperature)), temperature)
    out = cam_apply(g, params, p_s, p_t)
    return kd_kl(g, student_logits, out.reweighted_teacher, temperature)
