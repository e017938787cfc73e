import time

import numpy as np
import pytest

from rainlab.errors import NumericError, ShapeError, StateError
from rainlab.micronet import engine
from rainlab.micronet.engine import (
    Tensor, absolute, add, backward, conv2d, conv2d_forward, l1_loss, mean, mul, no_grad, relu, sub,
)
from rainlab.micronet.model import ModelConfig, ResNetRestorer, parameter_count

from oracles import KinkRecorder, conv_oracle, fd_check


def leaf(rng, *shape):
    return Tensor(rng.standard_normal(shape), requires_grad=True)


# -- forward examples ----------------------------------------------------------

def test_identity_kernel(rng):
    x = rng.random((2, 5, 6, 3))
    w = np.zeros((3, 3, 3, 3))
    for c in range(3):
        w[1, 1, c, c] = 1.0
    out, _ = conv2d_forward(x, w, np.zeros(3))
    np.testing.assert_array_equal(out, x)


def test_ones_kernel_on_ones():
    out, _ = conv2d_forward(np.ones((1, 3, 3, 1)), np.ones((3, 3, 1, 1)), np.zeros(1))
    assert out[0, 1, 1, 0] == 9
    assert [out[0, i, j, 0] for i, j in ((0, 0), (0, 2), (2, 0), (2, 2))] == [4, 4, 4, 4]
    assert out[0, 0, 1, 0] == 6


@pytest.mark.parametrize("seed", range(3))
def test_conv_matches_loop_oracle(seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((2, 5, 4, 3)).astype(np.float32)
    w = rng.standard_normal((3, 3, 3, 2)).astype(np.float32)
    b = rng.standard_normal(2).astype(np.float32)
    out = conv2d(Tensor(x), Tensor(w), Tensor(b)).data
    assert np.abs(out - conv_oracle(x.astype(float), w.astype(float), b.astype(float))).max() < 1e-5
    out64 = conv2d(Tensor(x.astype(float)), Tensor(w.astype(float)), Tensor(b.astype(float))).data
    assert np.abs(out64 - conv_oracle(x.astype(float), w.astype(float), b.astype(float))).max() < 1e-6


def test_conv_shape_errors(rng):
    with pytest.raises(ShapeError):
        conv2d(Tensor(rng.random((1, 4, 4, 2))), Tensor(rng.random((3, 3, 3, 1))))
    with pytest.raises(ShapeError):
        conv2d(Tensor(rng.random((1, 4, 4, 3))), Tensor(rng.random((2, 2, 3, 1))))


def test_l1_examples(rng):
    t = rng.random((2, 3, 3, 1))
    assert l1_loss(Tensor(t), Tensor(t)).item() == 0.0
    assert l1_loss(Tensor(t + 0.2), Tensor(t)).item() == pytest.approx(0.2, abs=1e-12)
    p = rng.standard_normal((2, 3, 3, 1))
    expect = sum(abs(a - b) for a, b in zip(p.ravel(), t.ravel())) / p.size
    assert l1_loss(Tensor(p), Tensor(t)).item() == pytest.approx(expect, abs=1e-14)
    with pytest.raises(ShapeError):
        l1_loss(Tensor(p), Tensor(t[:1]))


# -- backward examples ---------------------------------------------------------

def test_zero_loss_zero_grads(rng):
    x = leaf(rng, 2, 3)
    loss = l1_loss(x, Tensor(x.data.copy()))
    backward(loss)
    assert (x.grad == 0).all()
    y = leaf(rng, 2, 3)
    backward(mean(absolute(sub(y, y))))
    assert (y.grad == 0).all()


@pytest.mark.parametrize("x,w,t", [(2.0, 0.5, 3.0), (-1.5, 2.0, -4.0), (2.0, 1.5, 3.0)])
def test_linear_map_gradient(x, w, t):
    wt = Tensor(np.array([w]), requires_grad=True)
    y = mul(wt, Tensor(np.array([x])))
    backward(l1_loss(y, Tensor(np.array([t]))))
    assert wt.grad[0] == np.sign(w * x - t) * x


def test_backward_requires_graph(rng):
    x = leaf(rng, 3)
    with pytest.raises(StateError):
        backward(x)
    loss = mean(relu(x))
    backward(loss)
    with pytest.raises(StateError):
        backward(loss)
    with no_grad():
        out = mean(relu(x))
    with pytest.raises(StateError):
        backward(out)


def test_shared_subexpression_accumulates(rng):
    x = leaf(rng, 4)
    backward(mean(add(mul(x, x), x)))
    np.testing.assert_allclose(x.grad, (2 * x.data + 1) / 4)


def test_non_finite_raises():
    x = Tensor(np.array([[[[np.inf]]]]))
    with np.errstate(invalid="ignore"):
        with pytest.raises(NumericError):
            conv2d(x, Tensor(np.ones((3, 3, 1, 1))))
        with pytest.raises(NumericError):
            add(Tensor(np.array([np.inf])), Tensor(np.array([-np.inf])))


# -- finite-difference oracles -------------------------------------------------

def test_fd_elementwise_ops(rng):
    a, b = leaf(rng, 2, 3, 3, 2), leaf(rng, 2, 3, 3, 2)
    target = Tensor(rng.standard_normal((2, 3, 3, 2)) + 5.0)
    assert fd_check([a, b], lambda: l1_loss(add(a, b), target)) < 1e-4
    assert fd_check([a, b], lambda: l1_loss(sub(a, b), target)) < 1e-4
    assert fd_check([a, b], lambda: l1_loss(mul(a, b), target)) < 1e-4
    assert fd_check([a], lambda: mean(mul(a, a))) < 1e-4


def test_fd_kinked_ops(rng, monkeypatch):
    rec = KinkRecorder(monkeypatch)
    a = leaf(rng, 2, 4, 4, 3)
    w = Tensor(rng.standard_normal(a.shape), requires_grad=False)
    assert fd_check([a], lambda: mean(mul(engine.relu(a), w)), rec) < 1e-4
    assert fd_check([a], lambda: mean(mul(engine.absolute(a), w)), rec) < 1e-4
    target = Tensor(rng.standard_normal(a.shape))
    assert fd_check([a], lambda: rec.l1_loss(a, target), rec) < 1e-4


def test_fd_conv(rng):
    x, w, b = leaf(rng, 2, 5, 6, 3), leaf(rng, 3, 3, 3, 2), leaf(rng, 2)
    target = Tensor(rng.standard_normal((2, 5, 6, 2)) * 0.1 + 20.0)
    assert fd_check([x, w, b], lambda: l1_loss(conv2d(x, w, b), target)) < 1e-4
    wz = Tensor(rng.standard_normal((2, 5, 6, 2)))
    assert fd_check([x, w, b], lambda: mean(mul(conv2d(x, w, b), wz))) < 1e-4


def test_fd_full_network(monkeypatch):
    start = time.perf_counter()
    rec = KinkRecorder(monkeypatch)
    cfg = ModelConfig(in_channels=3, features=4, blocks=1, out_channels=3)
    model = ResNetRestorer(cfg, seed=11, dtype=np.float64)
    rng = np.random.default_rng(5)
    # non-zero tail so every parameter receives gradient
    model.params["tail.w"].data[...] = rng.standard_normal(model.params["tail.w"].shape) * 0.3
    model.params["tail.b"].data[...] = rng.standard_normal(3) * 0.1
    x = Tensor(rng.random((2, 8, 8, 3)))
    with no_grad():
        base = model(x).data
    # keep every l1 residual at least 0.1 from its kink
    target = Tensor(base + np.where(rng.random(base.shape) < 0.5, -1, 1) * rng.uniform(0.1, 0.3, base.shape))
    params = list(model.params.values())
    assert sum(p.data.size for p in params) == parameter_count(cfg)
    worst = fd_check(params, lambda: rec.l1_loss(model(x), target), rec)
    print(f"full network: worst rel err {worst:.2e}, kink-skipped {fd_check.last_skipped}")
    assert worst < 1e-4
    assert time.perf_counter() - start < 60
