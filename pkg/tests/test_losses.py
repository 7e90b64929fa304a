import math

import numpy as np
import pytest

from akd import (
    ContractError,
    DataError,
    Graph,
    ParameterError,
    ProbBatch,
    Tensor,
    combine,
    cross_entropy,
    grad_check,
    kd_kl,
    softmax_values,
)


def ce_oracle(logits_row, label):
    # independent route: -log(exp(z_y) / sum exp(z))
    denom = sum(math.exp(v) for v in logits_row)
    return -math.log(math.exp(logits_row[label]) / denom)


def test_ce_uniform_logits():
    g = Graph()
    out = cross_entropy(g, Tensor([[0.0, 0.0, 0.0]]), [0])
    assert abs(out.values[0, 0] - math.log(3.0)) < 1e-12


def test_ce_confident_logits():
    g = Graph()
    out = cross_entropy(g, Tensor([[10.0, 0.0, 0.0]]), [0])
    expected = ce_oracle([10.0, 0.0, 0.0], 0)
    assert abs(out.values[0, 0] - expected) < 1e-12
    assert abs(expected - 9.08e-5) < 1e-6


def test_ce_batch_matches_oracle():
    rng = np.random.default_rng(5)
    logits = rng.standard_normal((6, 4)) * 3.0
    labels = rng.integers(0, 4, 6)
    out = cross_entropy(Graph(), Tensor(logits), labels)
    for i in range(6):
        assert abs(out.values[i, 0] - ce_oracle(list(logits[i]), int(labels[i]))) < 1e-10


def test_ce_label_out_of_range_names_row():
    with pytest.raises(DataError, match="row 1"):
        cross_entropy(Graph(), Tensor(np.zeros((3, 3))), [0, 5, 1])


def test_ce_gradient_is_softmax_minus_one_hot():
    rng = np.random.default_rng(8)
    logits_vals = rng.standard_normal((4, 5))
    labels = rng.integers(0, 5, 4)
    g = Graph()
    z = Tensor(logits_vals, requires_grad=True)
    loss = g.mean_all(cross_entropy(g, z, labels))
    g.backward(loss)
    p = softmax_values(logits_vals, 1.0)
    one_hot = np.zeros((4, 5))
    one_hot[np.arange(4), labels] = 1.0
    assert np.allclose(z.grad, (p - one_hot) / 4.0, atol=1e-12)


def test_kd_self_distillation_is_zero():
    rng = np.random.default_rng(21)
    for _ in range(100):
        logits = rng.standard_normal((3, 5)) * 4.0
        t = float(rng.uniform(0.5, 8.0))
        teacher = ProbBatch(Tensor(softmax_values(logits, t)), t)
        out = kd_kl(Graph(), Tensor(logits), teacher, t)
        assert np.all(out.values >= 0.0)
        assert np.all(out.values < 1e-10)


def test_kd_one_hot_teacher_closed_form():
    # teacher [1, 0] against a uniform student: KL = log 2
    teacher = ProbBatch(Tensor([[1.0, 0.0]]), 1.0)
    out = kd_kl(Graph(), Tensor([[0.0, 0.0]]), teacher, 1.0)
    assert abs(out.values[0, 0] - math.log(2.0)) < 1e-12


def test_kd_nonnegative_over_random_pairs():
    rng = np.random.default_rng(13)
    for _ in range(200):
        c = int(rng.integers(2, 7))
        logits = rng.standard_normal((4, c)) * 5.0
        t = float(rng.uniform(0.5, 6.0))
        teacher = ProbBatch(Tensor(softmax_values(rng.standard_normal((4, c)) * 5.0, t)), t)
        out = kd_kl(Graph(), Tensor(logits), teacher, t)
        assert np.all(out.values >= 0.0)


def test_kd_rejects_unnormalized_teacher():
    teacher = ProbBatch(Tensor([[0.7, 0.7]]), 1.0)
    with pytest.raises(DataError, match="row 0"):
        kd_kl(Graph(), Tensor([[0.0, 0.0]]), teacher, 1.0)


def test_kd_rejects_temperature_mismatch():
    teacher = ProbBatch(Tensor([[0.5, 0.5]]), 2.0)
    with pytest.raises(DataError):
        kd_kl(Graph(), Tensor([[0.0, 0.0]]), teacher, 4.0)


def _parts(g, logits_vals, labels, teacher_vals, t):
    z = Tensor(logits_vals, requires_grad=True)
    ce = cross_entropy(g, z, labels)
    kd = kd_kl(g, z, ProbBatch(Tensor(teacher_vals), t), t)
    return z, ce, kd


def test_combine_pure_ce_limit():
    g = Graph()
    rng = np.random.default_rng(2)
    logits = rng.standard_normal((5, 3))
    teacher = softmax_values(rng.standard_normal((5, 3)), 1.0)
    _, ce, kd = _parts(g, logits, rng.integers(0, 3, 5), teacher, 1.0)
    bd = combine(g, ce, kd, np.ones(5), 1.0)
    assert bd.total.item() == pytest.approx(float(np.mean(bd.ce_per_sample)), abs=1e-15)


def test_combine_pure_kd_limit_applies_t_squared():
    g = Graph()
    rng = np.random.default_rng(4)
    logits = rng.standard_normal((5, 3))
    teacher = softmax_values(rng.standard_normal((5, 3)), 2.0)
    _, ce, kd = _parts(g, logits, rng.integers(0, 3, 5), teacher, 2.0)
    bd = combine(g, ce, kd, np.zeros(5), 2.0)
    # alpha = 0, T = 2: total is exactly 4 * mean(kd)
    assert bd.total.item() == 4.0 * float(np.mean(bd.kd_per_sample))


def test_combine_hand_arithmetic():
    g = Graph()
    ce = g.scale(Tensor([[2.0]]), 1.0)
    kd = g.scale(Tensor([[1.0]]), 1.0)
    bd = combine(g, ce, kd, [0.5], 1.0)
    assert bd.total.item() == pytest.approx(1.5, abs=1e-15)


def test_combine_contract_errors():
    g = Graph()
    ce = g.scale(Tensor([[2.0], [1.0]]), 1.0)
    kd = g.scale(Tensor([[1.0], [1.0]]), 1.0)
    with pytest.raises(ContractError):
        combine(g, ce, kd, [0.5], 1.0)
    with pytest.raises(ParameterError):
        combine(g, ce, kd, [0.5, 1.5], 1.0)
    with pytest.raises(ParameterError):
        combine(g, ce, kd, [0.5, 0.5], -1.0)


def test_combine_linear_in_alpha():
    rng = np.random.default_rng(17)
    logits = rng.standard_normal((1, 4))
    teacher = softmax_values(rng.standard_normal((1, 4)), 3.0)
    labels = [2]

    def total_at(alpha):
        g = Graph()
        _, ce, kd = _parts(g, logits, labels, teacher, 3.0)
        return combine(g, ce, kd, [alpha], 3.0).total.item(), ce.values[0, 0], kd.values[0, 0]

    base, ce0, kd0 = total_at(0.0)
    for alpha in np.linspace(0.0, 1.0, 11):
        total, _, _ = total_at(float(alpha))
        assert abs((total - base) - alpha * (ce0 - 9.0 * kd0)) < 1e-10


def test_total_recomputes_from_parts():
    rng = np.random.default_rng(23)
    logits = rng.standard_normal((8, 5))
    teacher = softmax_values(rng.standard_normal((8, 5)), 4.0)
    alphas = rng.uniform(0.05, 0.95, 8)
    g = Graph()
    _, ce, kd = _parts(g, logits, rng.integers(0, 5, 8), teacher, 4.0)
    bd = combine(g, ce, kd, alphas, 4.0)
    rebuilt = np.mean(bd.alpha_used * bd.ce_per_sample + (1 - bd.alpha_used) * 16.0 * bd.kd_per_sample)
    assert abs(bd.total.item() - rebuilt) < 1e-10
    assert np.array_equal(bd.alpha_used, alphas)


def test_one_hot_teacher_at_unit_temperature_collapses_to_ce():
    # at T = 1 with a one-hot teacher on the true labels, the KL term equals
    # the CE term, so any fixed alpha gives total = mean(ce)
    rng = np.random.default_rng(31)
    logits = rng.standard_normal((6, 4)) * 2.0
    labels = rng.integers(0, 4, 6)
    one_hot = np.zeros((6, 4))
    one_hot[np.arange(6), labels] = 1.0
    g = Graph()
    z = Tensor(logits, requires_grad=True)
    ce = cross_entropy(g, z, labels)
    kd = kd_kl(g, z, ProbBatch(Tensor(one_hot), 1.0), 1.0)
    bd = combine(g, ce, kd, np.full(6, 0.3), 1.0)
    assert abs(bd.total.item() - float(np.mean(bd.ce_per_sample))) < 1e-10


def test_combined_loss_gradient_matches_finite_differences():
    rng = np.random.default_rng(41)
    teacher = softmax_values(rng.standard_normal((3, 4)) * 2.0, 4.0)
    labels = rng.integers(0, 4, 3)

    def f(g, z):
        ce = cross_entropy(g, z, labels)
        kd = kd_kl(g, z, ProbBatch(Tensor(teacher), 4.0), 4.0)
        return combine(g, ce, kd, np.full(3, 0.37), 4.0).total

    assert grad_check(f, Tensor(rng.standard_normal((3, 4)))) < 1e-4
