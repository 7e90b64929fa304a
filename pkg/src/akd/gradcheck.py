"""Finite-difference verification suite over the loss and model pipelines.

Every component is checked at small shapes against central differences at
eps = 1e-5; anything above the threshold fails the suite. Checked tensors are
capped at 64 entries to bound the oracle's cost.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .alpha import dynamic_alpha, prob_discrepancy
from .cam import CamParams, cam_attention, cam_kd_loss, cam_reweight, init_cam
from .errors import ParameterError
from .losses import combine, cross_entropy, kd_kl
from .models import MlpModel
from .tensor import Graph, ProbBatch, Tensor, grad_check, softmax_values

THRESHOLD = 1e-4
MAX_PARAMS_PER_CHECK = 64


@dataclass(frozen=True)
class CheckResult:
    component: str
    max_rel_error: float

    def passed(self, threshold: float = THRESHOLD) -> bool:
        return self.max_rel_error < threshold


def _guard(x: Tensor) -> Tensor:
    if x.values.size > MAX_PARAMS_PER_CHECK:
        raise ParameterError(
            f"checked tensor has {x.values.size} entries, cap is {MAX_PARAMS_PER_CHECK}"
        )
    return x


def _checked(name: str, f, x: Tensor, eps: float) -> CheckResult:
    return CheckResult(name, grad_check(f, _guard(x), eps))


def run_gradient_suite(temperature: float = 4.0, k: float = 10.0, seed: int = 0,
                       eps: float = 1e-5) -> list[CheckResult]:
    """Check CE, KL, the combined loss under all three weighting policies,
    the attention-reweighting pipeline, and a small classifier forward."""
    rng = np.random.Generator(np.random.PCG64(seed))
    b, c = 3, 4
    logits = Tensor(rng.standard_normal((b, c)))
    teacher_vals = softmax_values(rng.standard_normal((b, c)), temperature)
    labels = rng.integers(0, c, b)
    results = []

    def f_ce(g, z):
        return g.mean_all(cross_entropy(g, z, labels))

    results.append(_checked("cross_entropy", f_ce, logits, eps))

    def f_kd(g, z):
        return g.mean_all(kd_kl(g, z, ProbBatch(Tensor(teacher_vals), temperature), temperature))

    results.append(_checked("kd_kl", f_kd, logits, eps))

    def total_with_alpha(g, z, alpha):
        ce = cross_entropy(g, z, labels)
        kd = kd_kl(g, z, ProbBatch(Tensor(teacher_vals), temperature), temperature)
        return combine(g, ce, kd, alpha, temperature).total

    def f_fixed(g, z):
        return total_with_alpha(g, z, np.full(b, 0.5))

    results.append(_checked("combine_fixed", f_fixed, logits, eps))

    theta0 = Tensor([[0.3]])

    def f_learnable_logits(g, z):
        theta = Tensor(theta0.values.copy(), requires_grad=True)
        alpha = g.matmul(Tensor(np.ones((b, 1))), g.sigmoid(theta))
        return total_with_alpha(g, z, alpha)

    def f_learnable_theta(g, th):
        alpha = g.matmul(Tensor(np.ones((b, 1))), g.sigmoid(th))
        return total_with_alpha(g, Tensor(logits.values.copy()), alpha)

    err = max(
        grad_check(f_learnable_logits, _guard(logits), eps),
        grad_check(f_learnable_theta, _guard(theta0), eps),
    )
    results.append(CheckResult("combine_learnable", err))

    # the dynamic weight is a schedule, not a gradient path: freeze it at the
    # base point so both differentiation routes see the same constant
    base_alpha = dynamic_alpha(
        prob_discrepancy(softmax_values(logits.values, temperature), teacher_vals), k
    )

    def f_dynamic(g, z):
        return total_with_alpha(g, z, base_alpha)

    results.append(_checked("combine_dynamic", f_dynamic, logits, eps))

    cam_c = 3
    cam_b = 3
    cam_params = init_cam(cam_c, rng, hidden_multiplier=2, zero_init_output=False)
    cam_logits = Tensor(rng.standard_normal((cam_b, cam_c)))
    cam_teacher = Tensor(rng.standard_normal((cam_b, cam_c)))

    def cam_loss_with(g, params: CamParams, z: Tensor) -> Tensor:
        return g.mean_all(cam_kd_loss(g, params, z, cam_teacher, temperature))

    # the student view feeding the attention MLP is detached by design, so for
    # the logits direction the attention is frozen at the base point, exactly
    # like the dynamic weighting schedule
    cam_pt_vals = softmax_values(cam_teacher.values, temperature)
    scratch = Graph()
    base_attention = cam_attention(
        scratch,
        cam_params,
        ProbBatch(Tensor(softmax_values(cam_logits.values, temperature)), temperature),
        ProbBatch(Tensor(cam_pt_vals), temperature),
    ).values.copy()

    def f_cam_logits(g, z):
        target = cam_reweight(g, Tensor(base_attention), ProbBatch(Tensor(cam_pt_vals), temperature))
        return g.mean_all(kd_kl(g, z, target, temperature))

    errors = [grad_check(f_cam_logits, _guard(cam_logits), eps)]
    for slot in ("w1", "b1", "w2", "b2"):

        def f_cam_param(g, probe, slot=slot):
            tensors = {
                name: (probe if name == slot else Tensor(getattr(cam_params, name).values.copy()))
                for name in ("w1", "b1", "w2", "b2")
            }
            return cam_loss_with(g, CamParams(**tensors), Tensor(cam_logits.values.copy()))

        errors.append(grad_check(f_cam_param, _guard(getattr(cam_params, slot)), eps))
    results.append(CheckResult("cam_pipeline", max(errors)))

    widths = (2, 3, 2)
    model = MlpModel.initialize(widths, rng)
    x_in = rng.standard_normal((3, 2))
    y_in = rng.integers(0, 2, 3)
    errors = []
    flat_params = model.params()
    for target_index in range(len(flat_params)):

        def f_model(g, probe, target_index=target_index):
            tensors = [
                probe if i == target_index else Tensor(p.values.copy())
                for i, p in enumerate(flat_params)
            ]
            weights = tensors[0::2]
            biases = tensors[1::2]
            clone = MlpModel(weights, biases)
            return g.mean_all(cross_entropy(g, clone.forward(g, Tensor(x_in)), y_in))

        errors.append(grad_check(f_model, _guard(flat_params[target_index]), eps))
    results.append(CheckResult("mlp_forward_ce", max(errors)))

    return results


def format_suite(results, threshold: float = THRESHOLD) -> str:
    lines = []
    for r in results:
        status = "PASS" if r.passed(threshold) else "FAIL"
        lines.append(f"{r.component:<20} max_rel_error={r.max_rel_error:.3e}  {status}")
    worst = max(r.max_rel_error for r in results)
    overall = "PASS" if all(r.passed(threshold) for r in results) else "FAIL"
    lines.append(f"{'overall':<20} worst={worst:.3e}  threshold={threshold:.0e}  {overall}")
    return "\n".join(lines)
