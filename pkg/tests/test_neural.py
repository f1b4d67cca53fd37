import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from macnoma.neural import (
    MLP, NetSpec, adam_step, load_checkpoint, save_checkpoint, soft_update,
)


def _fd_param_grad(net, x, g_out, eps=1e-6):
    """Central differences of ``sum(net(x) * g_out)`` w.r.t. every parameter."""
    grad = np.zeros_like(net.params)
    for i in range(net.params.size):
        old = net.params[i]
        net.params[i] = old + eps
        up = np.sum(net(x) * g_out)
        net.params[i] = old - eps
        down = np.sum(net(x) * g_out)
        net.params[i] = old
        grad[i] = (up - down) / (2 * eps)
    return grad


def _rel_err(a, b):
    return np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-12)


def test_spec_validation_and_sizes():
    spec = NetSpec(3, 2, (5, 4))
    assert spec.layer_shapes == [(3, 5), (5, 4), (4, 2)]
    assert spec.n_params == 3 * 5 + 5 + 5 * 4 + 4 + 4 * 2 + 2
    with pytest.raises(ValueError):
        NetSpec(0, 1)
    with pytest.raises(ValueError):
        NetSpec(2, 1, output_activation="sigmoid")


def test_layer_views_share_flat_storage():
    net = MLP(NetSpec(3, 2, (4,)), np.random.default_rng(0))
    net.params[:] = 0.0
    assert np.all(net.weights[0] == 0) and np.all(net.biases[1] == 0)
    net.weights[1][0, 0] = 5.0
    assert 5.0 in net.params


def test_forward_matches_list_oracle(rng):
    for act in ("identity", "tanh"):
        net = MLP(NetSpec(4, 3, (6, 5), act), rng)
        x = rng.normal(size=4)
        layers = [(w.tolist(), b.tolist()) for w, b in zip(net.weights, net.biases)]
        np.testing.assert_allclose(net(x), oracles.mlp_forward(layers, x, act), rtol=1e-12)
        batch = rng.normal(size=(7, 4))
        np.testing.assert_allclose(net(batch)[2], net(batch[2]), rtol=1e-14)


def test_init_bounds_and_final_scale():
    net = MLP(NetSpec(100, 3, (50,)), np.random.default_rng(1), final_scale=0.01)
    assert np.max(np.abs(net.weights[0])) <= 0.1
    assert np.max(np.abs(net.weights[1])) <= 0.01 / np.sqrt(50)


def test_input_width_checked():
    with pytest.raises(ValueError):
        MLP(NetSpec(3, 1), np.random.default_rng(0))(np.zeros(4))


@pytest.mark.parametrize("act", ["identity", "tanh"])
def test_backprop_matches_finite_differences(act, rng):
    net = MLP(NetSpec(5, 3, (8, 7), act), rng)
    x = rng.normal(size=(4, 5))
    g_out = rng.normal(size=(4, 3))
    out, cache = net.forward(x)
    grads, g_in = net.backward(cache, g_out)
    assert _rel_err(grads, _fd_param_grad(net, x, g_out)) < 1e-6
    fd_in = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        xp, xm = x.copy(), x.copy()
        xp[idx] += 1e-6
        xm[idx] -= 1e-6
        fd_in[idx] = (np.sum(net(xp) * g_out) - np.sum(net(xm) * g_out)) / 2e-6
    assert _rel_err(g_in, fd_in) < 1e-6


def test_backward_rejects_bad_grad_shape(rng):
    net = MLP(NetSpec(2, 2, (3,)), rng)
    _, cache = net.forward(np.zeros((4, 2)))
    with pytest.raises(ValueError):
        net.backward(cache, np.zeros((4, 3)))


def test_adam_first_step_moves_by_lr():
    net = MLP(NetSpec(2, 1, (3,)), np.random.default_rng(0))
    before = net.params.copy()
    grads = np.linspace(-1, 1, net.params.size)
    grads[grads == 0] = 0.5
    adam_step(net, grads, lr=0.01)
    # Bias-corrected first step is lr * sign(g) up to eps.
    np.testing.assert_allclose(before - net.params, 0.01 * np.sign(grads), rtol=1e-5)
    assert net.step == 1


def test_adam_minimizes_quadratic():
    net = MLP(NetSpec(1, 1, (2,)), np.random.default_rng(0))
    for _ in range(2000):
        adam_step(net, 2 * (net.params - 3.0), lr=0.05)
    np.testing.assert_allclose(net.params, 3.0, atol=1e-3)


@given(st.floats(1e-6, 1.0), st.integers(0, 1000))
def test_soft_update_exact(tau, seed):
    rng = np.random.default_rng(seed)
    src = MLP(NetSpec(3, 2, (4,)), rng)
    tgt = MLP(NetSpec(3, 2, (4,)), rng)
    old = tgt.params.copy()
    soft_update(tgt, src, tau)
    want = np.array(oracles.soft_update(old.tolist(), src.params.tolist(), tau))
    assert np.max(np.abs(tgt.params - want)) <= 1e-12


def test_soft_update_validation(rng):
    a = MLP(NetSpec(3, 2, (4,)), rng)
    with pytest.raises(ValueError):
        soft_update(a, MLP(NetSpec(3, 2, (5,)), rng), 0.1)
    with pytest.raises(ValueError):
        soft_update(a, a.copy(), 0.0)
    with pytest.raises(ValueError):
        soft_update(a, a.copy(), 1.5)


def test_copy_is_independent(rng):
    a = MLP(NetSpec(3, 2, (4,)), rng)
    b = a.copy()
    b.params += 1.0
    assert not np.allclose(a.params, b.params)
    assert b.weights[0].base is b.params or np.shares_memory(b.weights[0], b.params)


def test_checkpoint_roundtrip(tmp_path, rng):
    nets = {"actor": MLP(NetSpec(4, 2, (5,), "tanh"), rng), "critic": MLP(NetSpec(6, 1, (5,)), rng)}
    path = tmp_path / "ck.npz"
    save_checkpoint(path, nets, {"seed": 3})
    loaded, meta = load_checkpoint(path)
    assert meta == {"seed": 3}
    for k in nets:
        assert loaded[k].spec == nets[k].spec
        np.testing.assert_array_equal(loaded[k].params, nets[k].params)
    x = rng.normal(size=4)
    np.testing.assert_array_equal(loaded["actor"](x), nets["actor"](x))


def test_checkpoint_rejects_foreign_file(tmp_path):
    path = tmp_path / "other.npz"
    np.savez(path, header=np.array('{"format": "something", "version": 1}'))
    with pytest.raises(ValueError):
        load_checkpoint(path)
