"""MLP and Adam tests: orthogonal init properties, finite-difference
agreement for the hand-written backward pass, and optimizer behavior."""

import numpy as np

from instructrl.nets import MLP, Adam, orthogonal


def test_orthogonal_columns():
    rng = np.random.default_rng(0)
    w = orthogonal(8, 5, 1.0, rng)
    assert w.shape == (8, 5)
    assert np.allclose(w.T @ w, np.eye(5), atol=1e-10)
    wide = orthogonal(3, 7, 2.0, rng)
    assert wide.shape == (3, 7)
    assert np.allclose(wide @ wide.T, 4.0 * np.eye(3), atol=1e-10)


def test_orthogonal_deterministic():
    a = orthogonal(6, 6, 1.0, np.random.default_rng(42))
    b = orthogonal(6, 6, 1.0, np.random.default_rng(42))
    assert np.array_equal(a, b)


def test_mlp_shapes_and_zero_bias():
    net = MLP([4, 16, 16, 3], np.random.default_rng(1), out_gain=0.01)
    assert [p.shape for p in net.params] == [
        (4, 16), (16,), (16, 16), (16,), (16, 3), (3,)]
    assert all(np.all(net.params[2 * i + 1] == 0.0) for i in range(3))
    out = net(np.zeros((7, 4)))
    assert out.shape == (7, 3)
    assert np.allclose(out, 0.0)  # zero input, zero biases
    # output layer uses the small gain
    assert np.abs(net.params[4]).max() < 0.1
    assert np.abs(net.params[0]).max() > 0.1


def test_backward_matches_finite_differences():
    rng = np.random.default_rng(7)
    h = 1e-6
    for trial in range(10):
        sizes = [int(rng.integers(2, 6)) for _ in range(int(rng.integers(3, 5)))]
        net = MLP(sizes, rng, out_gain=1.0)
        for i in range(1, len(net.params), 2):
            net.params[i] += 0.1 * rng.standard_normal(net.params[i].shape)
        x = rng.standard_normal((int(rng.integers(1, 8)), sizes[0]))
        w = rng.standard_normal((x.shape[0], sizes[-1]))  # fixed loss weights

        def loss():
            return float((net(x) * w).sum())

        out, acts = net.forward(x)
        grads = net.backward(acts, w)
        for pi, p in enumerate(net.params):
            flat = p.reshape(-1)
            for j in range(flat.size):
                keep = flat[j]
                flat[j] = keep + h
                up = loss()
                flat[j] = keep - h
                down = loss()
                flat[j] = keep
                fd = (up - down) / (2 * h)
                assert abs(grads[pi].reshape(-1)[j] - fd) < 1e-5, (trial, pi, j)


def test_relu_masks_gradient():
    rng = np.random.default_rng(3)
    net = MLP([2, 4, 1], rng)
    x = np.array([[1.0, -1.0]])
    out, acts = net.forward(x)
    grads = net.backward(acts, np.ones((1, 1)))
    dead = acts[1][0] == 0.0
    # dead hidden units contribute no gradient to their incoming weights
    assert np.all(grads[0][:, dead] == 0.0)


def test_adam_descends_quadratic():
    p = [np.array([5.0, -3.0])]
    opt = Adam(p, lr=0.1)
    for _ in range(500):
        opt.step(p, [2.0 * p[0]])
    assert np.abs(p[0]).max() < 1e-2


def test_adam_first_step_is_lr_sized():
    p = [np.array([1.0])]
    opt = Adam(p, lr=0.01)
    opt.step(p, [np.array([123.4])])
    # bias correction makes the first update about lr regardless of scale
    assert abs(p[0][0] - (1.0 - 0.01)) < 1e-6


def test_adam_state_tracks_each_param():
    rng = np.random.default_rng(5)
    p = [rng.standard_normal((3, 2)), rng.standard_normal(2)]
    opt = Adam(p, lr=0.05)
    g = [np.ones((3, 2)), np.zeros(2)]
    before = p[1].copy()
    opt.step(p, g)
    assert np.array_equal(p[1], before)  # zero grad, no movement
    assert opt.t == 1 and opt.m[0].shape == (3, 2)
