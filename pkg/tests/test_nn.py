import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from bcl.nn import (
    AdamState,
    ParamStore,
    adam_step,
    dense_matmul,
    grad_check,
    mse_loss,
    relu,
    relu_backward,
    softmax_ce_loss,
    spmm,
)


def test_matmul():
    m = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert np.array_equal(dense_matmul(np.eye(2), m), m)
    assert dense_matmul(m, [[1.0], [1.0]]).tolist() == [[3.0], [7.0]]
    with pytest.raises(ValueError, match="shape"):
        dense_matmul(np.zeros((2, 3)), np.zeros((2, 3)))


small = hnp.arrays(np.float64, (3, 3), elements=st.floats(-1, 1))


@settings(max_examples=50, deadline=None)
@given(a=small, b=small, c=small)
def test_matmul_algebra(a, b, c):
    assert np.allclose(dense_matmul(a, np.eye(3)), a, atol=1e-12)
    assert np.allclose(dense_matmul(dense_matmul(a, b), c), dense_matmul(a, dense_matmul(b, c)), atol=1e-12)
    assert np.allclose(dense_matmul(a, b + c), dense_matmul(a, b) + dense_matmul(a, c), atol=1e-12)


def test_spmm():
    h = np.array([[2.0], [4.0]])
    assert np.array_equal(spmm(sp.identity(2, format="csr"), h), h)
    assert spmm(sp.csr_matrix(np.full((2, 2), 0.5)), h).tolist() == [[3.0], [3.0]]
    with pytest.raises(ValueError, match="shape"):
        spmm(sp.identity(3, format="csr"), h)


def test_relu():
    x = np.array([[-1.0, 2.0]])
    assert relu(x).tolist() == [[0.0, 2.0]]
    assert relu_backward(x, np.array([[5.0, 5.0]])).tolist() == [[0.0, 5.0]]
    assert relu_backward(np.zeros((1, 1)), np.ones((1, 1))).tolist() == [[0.0]]
    assert not relu(-np.ones((2, 2))).any()


def test_ce_loss_values():
    loss, _ = softmax_ce_loss(np.zeros((1, 2)), [0], [0])
    assert loss == pytest.approx(math.log(2), abs=1e-15)
    loss, _ = softmax_ce_loss(np.array([[10.0, -10.0]]), [0], [0])
    assert loss == pytest.approx(math.log1p(math.exp(-20.0)), rel=1e-9)
    assert loss == pytest.approx(2.06e-9, rel=1e-3)
    with pytest.raises(ValueError, match="empty"):
        softmax_ce_loss(np.zeros((2, 2)), [0, 1], [])


def test_ce_gradient_rows():
    rng = np.random.default_rng(0)
    logits = rng.normal(size=(6, 2))
    labels = np.array([0, 1, 0, 1, 1, 0])
    mask = np.array([1, 2, 4])
    w = (0.7, 2.5)
    loss, grad = softmax_ce_loss(logits, labels, mask, w)
    assert not grad[[0, 3, 5]].any()
    p = np.exp(logits) / np.exp(logits).sum(1, keepdims=True)
    for i in mask:
        onehot = np.eye(2)[labels[i]]
        assert np.allclose(grad[i], w[labels[i]] * (p[i] - onehot) / 3, atol=1e-15)


@pytest.mark.parametrize("seed", range(5))
def test_ce_permutation_equivariant(seed):
    rng = np.random.default_rng(seed)
    n = 30
    logits = rng.normal(size=(n, 2)) * 3
    labels = rng.integers(0, 2, n)
    mask = np.sort(rng.choice(n, 12, replace=False))
    perm = rng.permutation(n)
    inv = np.argsort(perm)
    loss, grad = softmax_ce_loss(logits, labels, mask, (1.0, 4.0))
    loss_p, grad_p = softmax_ce_loss(logits[perm], labels[perm], np.sort(inv[mask]), (1.0, 4.0))
    assert abs(loss - loss_p) <= 1e-12
    assert np.allclose(grad_p, grad[perm], rtol=0, atol=1e-15)


def test_mse():
    x = np.ones((2, 3))
    assert mse_loss(x, x)[0] == 0.0
    loss, grad = mse_loss([[1.0]], [[3.0]])
    assert loss == 4.0 and grad.tolist() == [[-4.0]]
    with pytest.raises(ValueError):
        mse_loss(np.zeros((1, 2)), np.zeros((2, 1)))


def test_param_store_shapes():
    store = ParamStore({"w": np.zeros((2, 3))})
    with pytest.raises(KeyError):
        store.add("w", np.zeros(1))
    with pytest.raises(ValueError):
        store.set_grad("w", np.zeros((3, 2)))


def test_adam_zero_grad_is_identity():
    store = ParamStore({"a": [[1.0, -2.0]], "b": [[3.0]]})
    before = store.copy()
    state = AdamState()
    adam_step(store, state)
    assert state.step == 1
    for k in store:
        assert np.array_equal(store[k], before[k])


def test_adam_first_step_magnitude():
    store = ParamStore({"w": [[1.0, 1.0, 1.0]]})
    store.set_grad("w", [[0.3, -2.0, 1e-3]])
    adam_step(store, AdamState(lr=0.01))
    # m_hat / sqrt(v_hat) = g / |g| on the first step
    assert np.allclose(store["w"], [[0.99, 1.01, 0.99]], atol=1e-7)
    assert not store.grads["w"].any()


def test_adam_deterministic():
    out = []
    for _ in range(2):
        store = ParamStore({"w": np.arange(6.0).reshape(2, 3)})
        state = AdamState()
        for k in range(5):
            store.set_grad("w", np.sin(store["w"] + k))
            adam_step(store, state)
        out.append(store["w"])
    assert np.array_equal(out[0], out[1])


def test_grad_check_quadratic():
    store = ParamStore({"w": [[1.0, 2.0]]})

    def loss_and_grad():
        w = store["w"]
        store.set_grad("w", 2 * w)
        return float((w ** 2).sum())

    assert grad_check(loss_and_grad, store, 1e-5) < 1e-6


def test_grad_check_catches_wrong_gradient():
    store = ParamStore({"w": [[1.0, 2.0]]})

    def loss_and_grad():
        store.set_grad("w", 3 * store["w"])
        return float((store["w"] ** 2).sum())

    assert grad_check(loss_and_grad, store, 1e-5) > 0.1


def test_grad_check_subsamples_and_validates():
    store = ParamStore({"w": np.ones((30, 10))})
    calls = []

    def loss_and_grad():
        calls.append(1)
        store.set_grad("w", 2 * store["w"])
        return float((store["w"] ** 2).sum())

    assert grad_check(loss_and_grad, store, 1e-5, max_entries=100) < 1e-6
    assert len(calls) == 1 + 2 * 100
    with pytest.raises(ValueError):
        grad_check(loss_and_grad, store, 1e-2)

    def bad():
        return float("nan")

    with pytest.raises(FloatingPointError):
        grad_check(bad, store, 1e-5)
