import numpy as np
import pytest

from akd import (
    ContractError,
    Graph,
    MlpModel,
    ParameterError,
    ShapeError,
    Tensor,
    cross_entropy,
    grad_check,
    make_rings,
    train_teacher,
)
from akd.models import AdamOptimizer, SgdOptimizer, accuracy, make_optimizer

ADAM_SPEC = {"kind": "adam", "lr": 0.02, "momentum": 0.9, "beta1": 0.9, "beta2": 0.999, "eps": 1e-8}


def _rng(seed=0):
    return np.random.default_rng(seed)


def test_forward_zero_weights_gives_zero_logits():
    model = MlpModel.initialize([3, 4, 2], _rng())
    for p in model.params():
        p.values[:] = 0.0
    out = model.forward(Graph(), Tensor(np.ones((2, 3))))
    assert np.array_equal(out.values, np.zeros((2, 2)))
    assert np.array_equal(model.forward_values(np.ones((2, 3))), np.zeros((2, 2)))


def test_forward_identity_single_layer():
    model = MlpModel.initialize([2, 2], _rng())
    model.weights[0].values[:] = np.eye(2)
    model.biases[0].values[:] = 0.0
    out = model.forward(Graph(), Tensor([[1.0, 2.0]]))
    assert np.array_equal(out.values, [[1.0, 2.0]])


def test_forward_width_mismatch():
    model = MlpModel.initialize([3, 2], _rng())
    with pytest.raises(ShapeError):
        model.forward(Graph(), Tensor(np.zeros((1, 4))))
    with pytest.raises(ShapeError):
        model.forward_values(np.zeros((1, 4)))


def test_graph_forward_matches_value_forward_bitwise():
    model = MlpModel.initialize([2, 5, 3], _rng(3))
    x = _rng(4).standard_normal((7, 2))
    graph_out = model.forward(Graph(), Tensor(x)).values
    assert np.array_equal(graph_out, model.forward_values(x))


def test_ce_through_forward_matches_finite_differences():
    rng = _rng(5)
    model = MlpModel.initialize([2, 3, 2], rng)
    x = rng.standard_normal((3, 2))
    y = rng.integers(0, 2, 3)
    flat = model.params()
    for target in range(len(flat)):

        def f(g, probe, target=target):
            tensors = [probe if i == target else Tensor(p.values.copy()) for i, p in enumerate(flat)]
            clone = MlpModel(tensors[0::2], tensors[1::2])
            return g.mean_all(cross_entropy(g, clone.forward(g, Tensor(x)), y))

        assert grad_check(f, flat[target]) < 1e-4


def test_sgd_single_step():
    p = Tensor([[1.0]], requires_grad=True)
    opt = SgdOptimizer([p], lr=0.1, momentum=0.0)
    p.grad[:] = 1.0
    opt.step()
    assert p.values[0, 0] == pytest.approx(0.9, abs=1e-15)


def test_sgd_zero_grad_is_fixed_point():
    p = Tensor([[1.0]], requires_grad=True)
    opt = SgdOptimizer([p], lr=0.1, momentum=0.9)
    opt.step()
    assert p.values[0, 0] == 1.0


def test_sgd_momentum_two_step_recursion():
    # v1 = 1, p = 0.9; v2 = 1 + 0.9 = 1.9, p = 0.9 - 0.19 = 0.71
    p = Tensor([[1.0]], requires_grad=True)
    opt = SgdOptimizer([p], lr=0.1, momentum=0.9)
    p.grad[:] = 1.0
    opt.step()
    p.grad[:] = 1.0
    opt.step()
    assert p.values[0, 0] == pytest.approx(0.71, abs=1e-15)


def test_adam_first_step_size_is_learning_rate():
    for g0 in (0.5, 1.0, -2.0, 0.1):
        p = Tensor([[3.0]], requires_grad=True)
        opt = AdamOptimizer([p], lr=0.05)
        p.grad[:] = g0
        opt.step()
        step = abs(p.values[0, 0] - 3.0)
        # closed form of the first bias-corrected step: lr * |g| / (|g| + eps)
        assert step == pytest.approx(0.05 * abs(g0) / (abs(g0) + 1e-8), rel=1e-12)
        assert abs(step - 0.05) < 0.05 * 1e-6
        assert np.sign(3.0 - p.values[0, 0]) == np.sign(g0)


def test_adam_zero_grad_is_fixed_point():
    p = Tensor([[2.0]], requires_grad=True)
    opt = AdamOptimizer([p], lr=0.05)
    for _ in range(3):
        opt.step()
    assert p.values[0, 0] == 2.0
    assert opt.step_count == 3


def test_adam_moment_shape_mismatch_is_contract_error():
    p = Tensor([[1.0]], requires_grad=True)
    opt = AdamOptimizer([p], lr=0.05)
    p.values = np.zeros((2, 2))
    p.grad = np.zeros((2, 2))
    with pytest.raises(ContractError):
        opt.step()


def test_unregistered_parameter_is_contract_error():
    p = Tensor([[1.0]], requires_grad=True)
    stranger = Tensor([[1.0]], requires_grad=True)
    opt = SgdOptimizer([p], lr=0.1)
    with pytest.raises(ContractError):
        opt.step([stranger])


def test_optimizer_rejects_grad_free_params():
    with pytest.raises(ContractError):
        SgdOptimizer([Tensor([[1.0]])], lr=0.1)
    with pytest.raises(ParameterError):
        make_optimizer("adam", [Tensor([[1.0]], requires_grad=True)], lr=-1.0)
    with pytest.raises(ParameterError):
        make_optimizer("rmsprop", [Tensor([[1.0]], requires_grad=True)], lr=0.1)


def _one_step_losses(opt_kind, seed):
    rng = _rng(seed)
    model = MlpModel.initialize([2, 8, 3], rng)
    x = rng.standard_normal((16, 2))
    y = rng.integers(0, 3, 16)
    opt = make_optimizer(opt_kind, model.params(), lr=1e-4, momentum=0.0)

    g = Graph()
    loss = g.mean_all(cross_entropy(g, model.forward(g, Tensor(x)), y))
    g.backward(loss)
    before = loss.item()
    opt.step()
    g2 = Graph()
    after = g2.mean_all(cross_entropy(g2, model.forward(g2, Tensor(x)), y)).item()
    return before, after


@pytest.mark.parametrize("kind,allowed_violations", [("sgd", 0), ("adam", 1)])
def test_one_small_step_decreases_frozen_batch_loss(kind, allowed_violations):
    violations = 0
    for seed in range(20):
        before, after = _one_step_losses(kind, 1000 + seed)
        if not after < before:
            violations += 1
    assert violations <= allowed_violations


def test_initialize_rejects_bad_widths():
    with pytest.raises(ParameterError):
        MlpModel.initialize([3], _rng())
    with pytest.raises(ParameterError):
        MlpModel.initialize([3, 0, 2], _rng())


def test_same_seed_gives_bit_identical_models():
    a = MlpModel.initialize([2, 16, 4], np.random.default_rng(12))
    b = MlpModel.initialize([2, 16, 4], np.random.default_rng(12))
    for pa, pb in zip(a.params(), b.params()):
        assert np.array_equal(pa.values, pb.values)


def test_train_teacher_beats_small_student_from_scratch(tmp_path):
    # capacity gap on a non-linearly-separable task
    ds = make_rings(1200, 4, 0.1, seed=77)
    teacher, teacher_acc = train_teacher(
        ds, [2, 64, 64, 4], epochs=15, batch_size=64, optimizer_spec=ADAM_SPEC,
        init_rng=_rng(1), shuffle_rng=_rng(2), checkpoint_path=tmp_path / "t.ckpt",
    )
    _, student_acc = train_teacher(
        ds, [2, 4, 4], epochs=15, batch_size=64, optimizer_spec=ADAM_SPEC,
        init_rng=_rng(3), shuffle_rng=_rng(4),
    )
    assert teacher_acc > student_acc
    assert (tmp_path / "t.ckpt").exists()
    loaded = MlpModel.load(tmp_path / "t.ckpt")
    assert accuracy(loaded, ds.val_features, ds.val_labels) == teacher_acc


def test_train_teacher_zero_epochs_is_chance_level():
    ds = make_rings(1000, 4, 0.1, seed=5)
    _, acc = train_teacher(
        ds, [2, 64, 64, 4], epochs=0, batch_size=64, optimizer_spec=ADAM_SPEC,
        init_rng=_rng(21), shuffle_rng=_rng(22),
    )
    assert abs(acc - 0.25) <= 0.05


def test_train_teacher_same_seed_bit_identical_weights():
    ds = make_rings(400, 3, 0.1, seed=9)
    m1, _ = train_teacher(ds, [2, 16, 3], epochs=3, batch_size=32, optimizer_spec=ADAM_SPEC,
                          init_rng=_rng(31), shuffle_rng=_rng(32))
    m2, _ = train_teacher(ds, [2, 16, 3], epochs=3, batch_size=32, optimizer_spec=ADAM_SPEC,
                          init_rng=_rng(31), shuffle_rng=_rng(32))
    for pa, pb in zip(m1.params(), m2.params()):
        assert np.array_equal(pa.values, pb.values)


def test_train_teacher_config_mismatch():
    ds = make_rings(400, 3, 0.1, seed=9)
    from akd import ConfigError

    with pytest.raises(ConfigError):
        train_teacher(ds, [5, 16, 3], epochs=1, batch_size=32, optimizer_spec=ADAM_SPEC,
                      init_rng=_rng(1), shuffle_rng=_rng(2))


def test_param_count_gap_in_shipped_defaults():
    teacher = MlpModel.initialize([2, 256, 256, 4], _rng(0))
    student = MlpModel.initialize([2, 16, 4], _rng(1))
    assert teacher.param_count() >= 4 * student.param_count()
