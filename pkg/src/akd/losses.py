"""Cross-entropy, temperature-scaled KL, and their weighted combination.

The distillation loss per sample is ``alpha * ce + (1 - alpha) * T^2 * kl``;
``kd_kl`` returns the raw KL so it can be tested on its own, and ``combine``
applies the T^2 factor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DataError, NumericError, ParameterError
from .tensor import Graph, ProbBatch, Tensor


def log_softmax(g: Graph, logits: Tensor, temperature: float = 1.0) -> Tensor:
    """Log of the temperature softmax via the log-sum-exp identity.

    Entries are always finite: the per-row max shift keeps the exponentials
    in [0, 1] and the log-sum in [0, log c].
    """
    if temperature <= 0:
        raise ParameterError(f"temperature must be positive, got {temperature}")
    z = g.scale(logits, 1.0 / float(temperature))
    # the shift is a constant: d(lse)/d(shift) is identically zero
    row_max = Tensor(z.values.max(axis=1, keepdims=True))
    ones_row = Tensor(np.ones((1, logits.cols)))
    shifted = g.sub(z, g.matmul(row_max, ones_row))
    log_total = g.log(g.row_sum(g.exp(shifted)))
    return g.sub(shifted, g.matmul(log_total, ones_row))


def cross_entropy(g: Graph, logits: Tensor, labels) -> Tensor:
    """Per-sample negative log-likelihood of the true class (b x 1).

    Uses temperature-1 probabilities; the gradient with respect to logits is
    softmax(logits) - one_hot(labels), row by row.
    """
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    b, c = logits.shape
    if labels.shape[0] != b:
        raise ContractError(f"{labels.shape[0]} labels for {b} rows")
    bad = np.nonzero((labels < 0) | (labels >= c))[0]
    if bad.size:
        raise DataError(f"label {labels[bad[0]]} out of range [0, {c}) at row {bad[0]}")
    one_hot = np.zeros((b, c))
    one_hot[np.arange(b), labels] = 1.0
    logp = log_softmax(g, logits, 1.0)
    picked = g.row_sum(g.hadamard(Tensor(one_hot), logp))
    return g.scale(picked, -1.0)


def kd_kl(g: Graph, student_logits: Tensor, teacher: ProbBatch, temperature: float) -> Tensor:
    """Per-sample KL(teacher || student) at the given temperature (b x 1).

    The student distribution is the temperature softmax of its logits. Raw KL,
    no T^2 factor; ``combine`` applies that. Teacher entries equal to zero
    contribute nothing. A teacher carrying gradient (attention-reweighted)
    must be strictly positive and stays in the differentiating path; a
    detached teacher is treated as a constant.
    """
    if temperature <= 0:
        raise ParameterError(f"temperature must be positive, got {temperature}")
    pt = teacher.probs
    b, c = student_logits.shape
    if pt.shape != (b, c):
        raise ContractError(f"teacher shape {pt.shape} vs student logits {student_logits.shape}")
    if teacher.temperature != float(temperature):
        raise DataError(
            f"teacher temperature {teacher.temperature} does not match requested {temperature}"
        )
    sums = pt.values.sum(axis=1)
    off = np.nonzero(np.abs(sums - 1.0) > 1e-6)[0]
    if off.size:
        raise DataError(f"teacher row {off[0]} sums to {sums[off[0]]!r}, not 1")

    logp_s = log_softmax(g, student_logits, temperature)
    if pt.requires_grad:
        if np.any(pt.values <= 0.0):
            raise NumericError("a gradient-carrying teacher must be strictly positive")
        log_pt = g.log(pt)
    else:
        vals = pt.values
        log_pt = Tensor(np.where(vals > 0.0, np.log(np.where(vals > 0.0, vals, 1.0)), 0.0))
    kl = g.row_sum(g.hadamard(pt, g.sub(log_pt, logp_s)))
    # float noise can push KL(p||p) a few ulp negative; clamp at zero
    return g.relu(kl)


@dataclass
class LossBreakdown:
    """Batch-mean loss pieces plus the exact per-sample values that formed them.

    ``total`` is the backward target. ``alpha_used``, ``ce_per_sample`` and
    ``kd_per_sample`` are detached copies kept for logging and verification.
    """

    ce: Tensor
    kd: Tensor
    total: Tensor
    alpha_used: np.ndarray
    ce_per_sample: np.ndarray
    kd_per_sample: np.ndarray


def combine(g: Graph, ce: Tensor, kd: Tensor, alpha, temperature: float) -> LossBreakdown:
    """Per-sample ``alpha*ce + (1-alpha)*T^2*kd``, reduced by batch mean.

    ``alpha`` is a b x 1 tensor or a length-b vector. A gradient-carrying
    alpha (the learnable policy) stays in the differentiating path; plain
    vectors (fixed and dynamic policies) are constants.
    """
    if temperature <= 0:
        raise ParameterError(f"temperature must be positive, got {temperature}")
    b = ce.rows
    if ce.shape != (b, 1) or kd.shape != (b, 1):
        raise ContractError(f"per-sample losses must be b x 1, got {ce.shape} and {kd.shape}")
    if isinstance(alpha, Tensor):
        a = alpha
    else:
        vec = np.asarray(alpha, dtype=np.float64).reshape(-1)
        if vec.shape[0] != b:
            raise ContractError(f"{vec.shape[0]} alpha entries for batch of {b}")
        a = Tensor(vec.reshape(b, 1))
    if a.shape != (b, 1):
        raise ContractError(f"alpha must be {b} x 1, got {a.shape}")
    av = a.values
    if np.any(av < 0.0) or np.any(av > 1.0):
        raise ParameterError("alpha entries must lie in [0, 1]")

    t2 = float(temperature) * float(temperature)
    ones = Tensor(np.ones((b, 1)))
    per_sample = g.add(g.hadamard(a, ce), g.hadamard(g.sub(ones, a), g.scale(kd, t2)))
    return LossBreakdown(
        ce=g.mean_all(ce),
        kd=g.mean_all(kd),
        total=g.mean_all(per_sample),
        alpha_used=av[:, 0].copy(),
        ce_per_sample=ce.values[:, 0].copy(),
        kd_per_sample=kd.values[:, 0].copy(),
    )
