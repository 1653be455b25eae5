import math

import numpy as np
import pytest

import alm.tensor as T
from alm.errors import ConfigError, NonFiniteError, ShapeError

H = 1e-5
TOL = 1e-6


def _numeric_grad(value, arrays, i):
    """Central finite differences of value(arrays) w.r.t. arrays[i]."""
    x = arrays[i]
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"], op_flags=["readonly"])
    for _ in it:
        idx = it.multi_index
        orig = x[idx]
        x[idx] = orig + H
        fp = value(arrays)
        x[idx] = orig - H
        fm = value(arrays)
        x[idx] = orig
        g[idx] = (fp - fm) / (2.0 * H)
    return g


def check_grads(build, shapes, seed=0):
    """Compare tape gradients of a scalar-valued builder to finite differences."""
    rng = np.random.default_rng(seed)
    arrays = [rng.standard_normal(s) for s in shapes]

    def value(arrs):
        return build(*[T.Tensor(a) for a in arrs]).item()

    params = [T.Tensor(a.copy(), requires_grad=True) for a in arrays]
    with T.Trace() as trace:
        loss = build(*params)
    T.backward(loss, trace)
    for i, p in enumerate(params):
        num = _numeric_grad(value, arrays, i)
        denom = np.maximum(1.0, np.maximum(np.abs(num), np.abs(p.grad)))
        rel = np.abs(p.grad - num) / denom
        assert rel.max() < TOL, f"input {i}: max rel error {rel.max():.3e}"


# ---------------------------------------------------------------------------
# gradient checks, one per differentiable op


def test_grad_add_broadcast():
    check_grads(lambda a, b: T.sum_all(T.add(a, b)), [(3, 4), (4,)], seed=1)
    check_grads(lambda a, b: T.sum_all(T.add(a, b)), [(3, 1), (1, 4)], seed=2)


def test_grad_sub():
    check_grads(lambda a, b: T.sum_all(T.sub(a, b)), [(2, 5), (5,)], seed=3)


def test_grad_mul_broadcast():
    check_grads(lambda a, b: T.sum_all(T.mul(a, b)), [(3, 4), (3, 1)], seed=4)


def test_grad_scale_and_mean():
    check_grads(lambda x: T.mean_all(T.scale(x, 2.5)), [(4, 3)], seed=5)


def test_grad_matmul_2d():
    check_grads(lambda a, b: T.sum_all(T.matmul(a, b)), [(3, 4), (4, 2)], seed=6)


def test_grad_matmul_batched_broadcast():
    check_grads(lambda a, b: T.sum_all(T.matmul(a, b)), [(2, 3, 4), (4, 5)], seed=7)
    check_grads(lambda a, b: T.sum_all(T.matmul(a, b)), [(2, 3, 4), (2, 4, 5)], seed=8)


def test_grad_gelu():
    check_grads(lambda x: T.sum_all(T.gelu(x)), [(4, 5)], seed=9)


def test_grad_softmax():
    # weight the rows so the scalar is not constant in x
    w = T.Tensor(np.random.default_rng(0).standard_normal((3, 6)))
    check_grads(lambda x: T.sum_all(T.mul(T.softmax(x, axis=-1), w)), [(3, 6)], seed=10)


def test_grad_layer_norm():
    check_grads(
        lambda x, g, b: T.sum_all(T.mul(T.layer_norm(x, g, b), x)),
        [(4, 6), (6,), (6,)],
        seed=11,
    )


def test_grad_embedding_lookup_accumulates_repeats():
    ids = np.array([0, 2, 0, 1])
    check_grads(
        lambda tab: T.sum_all(T.mul(T.embedding_lookup(tab, ids), tab_w)),
        [(3, 5)],
        seed=12,
    )


tab_w = T.Tensor(np.random.default_rng(99).standard_normal((4, 5)))


def test_grad_cross_entropy():
    targets = np.array([1, 0, 3])
    check_grads(lambda lg: T.cross_entropy(lg, targets), [(3, 4)], seed=13)


def test_grad_cross_entropy_masked():
    targets = np.array([1, 0, 3, 2])
    mask = np.array([1.0, 0.0, 1.0, 1.0])
    check_grads(lambda lg: T.cross_entropy(lg, targets, mask), [(4, 4)], seed=14)


def test_grad_dropout_fixed_seed():
    check_grads(lambda x: T.sum_all(T.dropout(x, 0.5, seed=123)), [(6, 6)], seed=15)


def test_grad_shape_ops():
    check_grads(lambda x: T.sum_all(T.mul(T.reshape(x, (6, 2)), T.reshape(x, (6, 2)))), [(3, 4)], seed=16)
    check_grads(lambda x: T.sum_all(T.mul(T.transpose(x, (1, 0, 2)), w3)), [(2, 3, 4)], seed=17)
    check_grads(lambda x: T.sum_all(T.mul(T.slice_axis(x, 1, 1, 3), T.slice_axis(x, 1, 0, 2))), [(2, 5)], seed=18)


w3 = T.Tensor(np.random.default_rng(7).standard_normal((3, 2, 4)))


def test_grad_take_positions():
    pos = np.array([0, 2])
    check_grads(
        lambda x: T.sum_all(T.mul(T.take_positions(x, pos), T.take_positions(x, pos))),
        [(2, 3, 4)],
        seed=19,
    )


def test_grad_composite_residual_block():
    def block(x, g, b, w1, w2):
        h = T.layer_norm(x, g, b)
        h = T.matmul(T.gelu(T.matmul(h, w1)), w2)
        return T.mean_all(T.mul(T.add(x, h), T.add(x, h)))

    check_grads(block, [(3, 4), (4,), (4,), (4, 8), (8, 4)], seed=20)


# ---------------------------------------------------------------------------
# specced value examples


def test_softmax_symmetry_golden():
    out = T.softmax(T.Tensor([0.0, 0.0]))
    assert out.data.tolist() == [0.5, 0.5]


def test_softmax_rows_normalized():
    x = T.Tensor(np.random.default_rng(21).standard_normal((7, 11)) * 5)
    s = T.softmax(x, axis=-1).data
    assert np.abs(s.sum(axis=-1) - 1.0).max() < 1e-12
    assert (s > 0).all() and (s < 1).all()


def test_layer_norm_constant_vector_is_zero():
    x = T.Tensor(np.full((3, 8), 2.7))
    out = T.layer_norm(x, T.Tensor(np.ones(8)), T.Tensor(np.zeros(8)))
    assert (out.data == 0.0).all()


def test_cross_entropy_uniform_logits_exact():
    for v in (2, 7, 16):
        logits = T.Tensor(np.full((4, v), 0.37))
        loss = T.cross_entropy(logits, np.zeros(4, dtype=int))
        assert loss.item() == math.log(v)


def test_square_gradient_golden():
    x = T.Tensor(3.0, requires_grad=True)
    with T.Trace() as tr:
        loss = x * x
    T.backward(loss, tr)
    assert float(x.grad) == 6.0


def test_matmul_sum_grad_equals_ones_times_bt():
    rng = np.random.default_rng(22)
    a = T.Tensor(rng.standard_normal((3, 4)), requires_grad=True)
    b = T.Tensor(rng.standard_normal((4, 2)), requires_grad=True)
    with T.Trace() as tr:
        loss = T.sum_all(T.matmul(a, b))
    T.backward(loss, tr)
    expect = np.ones((3, 2)) @ b.data.T
    assert np.allclose(a.grad, expect, rtol=0, atol=1e-12)


def test_detached_tensor_has_no_grad():
    x = T.Tensor([1.0, 2.0], requires_grad=True)
    d = x.detach()
    assert d.grad is None and not d.requires_grad
    with T.Trace() as tr:
        loss = T.sum_all(d * d)
    T.backward(loss, tr)
    assert (x.grad == 0).all()


def test_backward_linear_in_loss_scale():
    def run(factor):
        x = T.Tensor([1.0, -2.0, 0.5], requires_grad=True)
        with T.Trace() as tr:
            loss = T.scale(T.sum_all(T.gelu(x)), factor)
        T.backward(loss, tr)
        return x.grad.copy()

    g1, g3 = run(1.0), run(3.0)
    assert np.allclose(3.0 * g1, g3, rtol=0, atol=1e-15)


def test_unused_parameter_keeps_zero_grad():
    x = T.Tensor([1.0], requires_grad=True)
    unused = T.Tensor([5.0], requires_grad=True)
    with T.Trace() as tr:
        loss = T.sum_all(x * x)
    T.backward(loss, tr)
    assert (unused.grad == 0).all()


def test_gradients_accumulate_until_zeroed():
    x = T.Tensor(2.0, requires_grad=True)
    for expected in (4.0, 8.0):
        with T.Trace() as tr:
            loss = x * x
        T.backward(loss, tr)
        assert float(x.grad) == expected
    x.zero_grad()
    assert float(x.grad) == 0.0


def test_shared_input_used_twice_accumulates():
    x = T.Tensor([1.0, 2.0], requires_grad=True)
    with T.Trace() as tr:
        loss = T.sum_all(T.add(x * x, x * x))
    T.backward(loss, tr)
    assert np.allclose(x.grad, [4.0, 8.0], rtol=0, atol=0)


# ---------------------------------------------------------------------------
# contract errors


def test_add_shape_error_names_both_shapes():
    with pytest.raises(ShapeError) as exc:
        T.add(T.Tensor(np.zeros((2, 3))), T.Tensor(np.zeros((4,))))
    assert "(2, 3)" in str(exc.value) and "(4,)" in str(exc.value)


def test_matmul_shape_errors():
    with pytest.raises(ShapeError):
        T.matmul(T.Tensor(np.zeros((2, 3))), T.Tensor(np.zeros((4, 2))))
    with pytest.raises(ShapeError):
        T.matmul(T.Tensor(np.zeros(3)), T.Tensor(np.zeros((3, 2))))
    with pytest.raises(ShapeError):
        T.matmul(T.Tensor(np.zeros((2, 3, 4))), T.Tensor(np.zeros((3, 4, 5))))


def test_backward_rejects_non_scalar():
    x = T.Tensor([1.0, 2.0], requires_grad=True)
    with T.Trace() as tr:
        y = x * x
    with pytest.raises(ShapeError):
        T.backward(y, tr)


def test_cross_entropy_validation():
    logits = T.Tensor(np.zeros((2, 3)))
    with pytest.raises(ShapeError):
        T.cross_entropy(T.Tensor(np.zeros(3)), np.array([0]))
    with pytest.raises(ShapeError):
        T.cross_entropy(logits, np.array([0]))
    with pytest.raises(ShapeError):
        T.cross_entropy(logits, np.array([0, 3]))
    with pytest.raises(ShapeError):
        T.cross_entropy(logits, np.array([0, 1]), mask=np.zeros(2))


def test_layer_norm_eps_must_be_positive():
    x = T.Tensor(np.zeros((2, 4)))
    one, zero = T.Tensor(np.ones(4)), T.Tensor(np.zeros(4))
    with pytest.raises(ConfigError):
        T.layer_norm(x, one, zero, eps=0.0)


def test_dropout_probability_range():
    x = T.Tensor(np.ones(4))
    with pytest.raises(ConfigError):
        T.dropout(x, 1.0, seed=0)
    with pytest.raises(ConfigError):
        T.dropout(x, -0.1, seed=0)


def test_embedding_ids_out_of_range():
    tab = T.Tensor(np.zeros((3, 2)))
    with pytest.raises(ShapeError):
        T.embedding_lookup(tab, np.array([3]))
    with pytest.raises(ShapeError):
        T.embedding_lookup(tab, np.array([-1]))


def test_reshape_and_take_positions_errors():
    with pytest.raises(ShapeError):
        T.reshape(T.Tensor(np.zeros((2, 3))), (4, 4))
    with pytest.raises(ShapeError):
        T.take_positions(T.Tensor(np.zeros((2, 3))), np.array([0, 1]))


def test_overflow_raises_non_finite():
    big = T.Tensor(np.array([1e308]))
    with np.errstate(over="ignore"), pytest.raises(NonFiniteError):
        T.mul(big, big)


# ---------------------------------------------------------------------------
# dropout and rng behavior


def test_dropout_zero_probability_is_identity():
    x = T.Tensor(np.ones((3, 3)))
    assert T.dropout(x, 0.0, seed=0) is x


def test_dropout_deterministic_and_scaled():
    x = T.Tensor(np.ones((100, 100)))
    a = T.dropout(x, 0.3, seed=42).data
    b = T.dropout(x, 0.3, seed=42).data
    assert (a == b).all()
    kept = a != 0.0
    assert np.allclose(a[kept], 1.0 / 0.7)
    assert abs(kept.mean() - 0.7) < 0.02


def test_rng_normal_contracts():
    t = T.rng_normal((3, 3), mean=1.5, std=0.0, seed=8)
    assert (t.data == 1.5).all()
    a = T.rng_normal((4, 4), seed=77)
    b = T.rng_normal((4, 4), seed=77)
    assert (a.data == b.data).all()
    big = T.rng_normal((1_000_000,), mean=0.0, std=0.02, seed=31)
    assert abs(big.data.std() - 0.02) < 0.0002
    with pytest.raises(ConfigError):
        T.rng_normal((2,), std=-1.0)


def test_rng_uniform_contracts():
    a = T.rng_uniform((5, 5), low=2.0, high=3.0, seed=6)
    assert ((a.data >= 2.0) & (a.data < 3.0)).all()
    b = T.rng_uniform((5, 5), low=2.0, high=3.0, seed=6)
    assert (a.data == b.data).all()


def test_ops_outside_trace_keep_tensors_plain():
    x = T.Tensor([1.0, 2.0], requires_grad=True)
    y = T.sum_all(x * x)  # no trace active: nothing recorded
    assert y.item() == 5.0
    assert not y._in_graph
