"""Weighting policies for the hard-label vs distillation trade-off.

Three policies: a fixed constant, a learnable scalar squashed through a
sigmoid, and a schedule driven by the student-teacher probability
discrepancy. The dynamic schedule is deliberately non-differentiable: the
student must not lower its loss by steering its own discrepancy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, ParameterError
from .tensor import Graph, Tensor, sigmoid_values

# keep logged weights strictly inside (0, 1) even when the sigmoid saturates
ALPHA_FLOOR = 1e-300
ALPHA_CEIL = float(np.nextafter(1.0, 0.0))


def fixed_alpha(alpha0: float, batch: int) -> np.ndarray:
    """Constant weight vector; boundaries 0 and 1 are allowed here."""
    if not 0.0 <= alpha0 <= 1.0:
        raise ParameterError(f"alpha0 must lie in [0, 1], got {alpha0}")
    if batch < 1:
        raise ParameterError(f"batch must be at least 1, got {batch}")
    return np.full(batch, float(alpha0))


def learnable_alpha(g: Graph, theta: Tensor, batch: int) -> Tensor:
    """sigmoid(theta) broadcast to a b x 1 column; gradient reaches theta."""
    if theta.shape != (1, 1):
        raise ContractError(f"theta must be 1x1, got {theta.shape}")
    if batch < 1:
        raise ParameterError(f"batch must be at least 1, got {batch}")
    return g.matmul(Tensor(np.ones((batch, 1))), g.sigmoid(theta))


def prob_discrepancy(p_s, p_t) -> np.ndarray:
    """Per-sample mean over classes of squared probability differences.

    Computed on detached values; accepts ProbBatch or plain arrays. Bounded
    by 2/c because both rows are stochastic.
    """
    ps = np.asarray(getattr(p_s, "values", p_s), dtype=np.float64)
    pt = np.asarray(getattr(p_t, "values", p_t), dtype=np.float64)
    if ps.shape != pt.shape:
        raise ContractError(f"distribution shapes disagree: {ps.shape} vs {pt.shape}")
    return np.mean((ps - pt) ** 2, axis=1)


def dynamic_alpha(dist, k: float, sign_flip: bool = False) -> np.ndarray:
    """sigmoid(-k * dist) per sample (or +k with sign_flip).

    Strictly monotone in dist, exactly 0.5 at dist = 0, clamped inside
    (0, 1) so logged ratios never hit an exact boundary.
    """
    if k <= 0:
        raise ParameterError(f"k must be positive, got {k}")
    dist = np.asarray(dist, dtype=np.float64).reshape(-1)
    if np.any(dist < 0):
        raise ParameterError("dist entries must be non-negative")
    arg = (float(k) * dist) if sign_flip else (-float(k) * dist)
    return np.clip(sigmoid_values(arg), ALPHA_FLOOR, ALPHA_CEIL)


class FixedPolicy:
    """Constant alpha for every sample."""

    name = "fixed"

    def __init__(self, alpha0: float):
        if not 0.0 <= alpha0 <= 1.0:
            raise ParameterError(f"alpha0 must lie in [0, 1], got {alpha0}")
        self.alpha0 = float(alpha0)

    def params(self):
        return []

    def alpha_column(self, g: Graph, batch: int, dist: np.ndarray):
        vals = fixed_alpha(self.alpha0, batch)
        return Tensor(vals.reshape(batch, 1)), vals


class LearnablePolicy:
    """alpha = sigmoid(theta); theta is optimized jointly with the student."""

    name = "learnable"

    def __init__(self, theta0: float = 0.0):
        self.theta = Tensor([[float(theta0)]], requires_grad=True)

    def params(self):
        return [self.theta]

    def alpha_column(self, g: Graph, batch: int, dist: np.ndarray):
        col = learnable_alpha(g, self.theta, batch)
        vals = np.full(batch, float(sigmoid_values(self.theta.values)[0, 0]))
        return col, vals


class DynamicPolicy:
    """alpha scheduled from the probability discrepancy; no gradient path."""

    name = "dynamic"

    def __init__(self, k: float, sign_flip: bool = False):
        if k <= 0:
            raise ParameterError(f"k must be positive, got {k}")
        self.k = float(k)
        self.sign_flip = bool(sign_flip)

    def params(self):
        return []

    def alpha_column(self, g: Graph, batch: int, dist: np.ndarray):
        vals = dynamic_alpha(dist, self.k, self.sign_flip)
        if vals.shape[0] != batch:
            raise ContractError(f"{vals.shape[0]} dist entries for batch of {batch}")
        return Tensor(vals.reshape(batch, 1)), vals


@dataclass
class AlphaTraceRow:
    step: int
    alpha_mean: float
    alpha_std: float
    dist_mean: float


@dataclass
class AlphaTrace:
    """Per-step record of the exact weights used in the combined loss."""

    rows: list = field(default_factory=list)

    def append(self, step: int, alphas: np.ndarray, dists: np.ndarray) -> None:
        if self.rows and step <= self.rows[-1].step:
            raise ContractError(f"trace steps must increase, got {step} after {self.rows[-1].step}")
        self.rows.append(
            AlphaTraceRow(
                step=int(step),
                alpha_mean=float(np.mean(alphas)),
                alpha_std=float(np.std(alphas)),
                dist_mean=float(np.mean(dists)),
            )
        )

    def __len__(self) -> int:
        return len(self.rows)
