import math

import numpy as np
import pytest

from planarwalk.errors import ContractViolationError
from planarwalk.nets import (ActorCritic, Adam, Mlp, ObsNormalizer,
                             gaussian_entropy, gaussian_log_prob, mlp_forward,
                             orthogonal_init, sample_action)


def test_zero_parameters_give_zero_outputs():
    ac = ActorCritic(8, 3, hidden=8, layers=2, rng=np.random.default_rng(0))
    for p in ac.params().values():
        p[...] = 0.0
    mean, value = mlp_forward(ac, np.random.default_rng(1).normal(size=(4, 8)))
    assert np.all(mean == 0.0)
    assert np.all(value == 0.0)


def test_head_linearity():
    ac = ActorCritic(8, 3, hidden=8, layers=2, rng=np.random.default_rng(2))
    obs = np.random.default_rng(3).normal(size=(5, 8))
    mean1, _ = ac.forward(obs)
    ac.actor.weights[-1] *= 2.0
    ac.actor.biases[-1] *= 2.0
    mean2, _ = ac.forward(obs)
    np.testing.assert_allclose(mean2, 2.0 * mean1, rtol=1e-6)


def test_forward_rejects_wrong_dim():
    ac = ActorCritic(8, 3, hidden=8, layers=2)
    with pytest.raises(ContractViolationError):
        ac.forward(np.zeros((2, 9)))


def test_mlp_backward_matches_finite_differences():
    # plain regression loss on a small float64 net
    rng = np.random.default_rng(4)
    net = Mlp([6, 8, 8, 2], rng, head_gain=1.0, dtype=np.float64)
    x = rng.normal(size=(12, 6))
    target = rng.normal(size=(12, 2))

    def loss_value():
        out = net.forward(x)
        return 0.5 * float(((out - target) ** 2).sum())

    out, cache = net.forward(x, need_cache=True)
    gw, gb = net.backward(cache, out - target)
    grads = {}
    for i in range(len(net.weights)):
        grads[("w", i)] = gw[i]
        grads[("b", i)] = gb[i]
    h = 1e-6
    for i in range(len(net.weights)):
        for kind, arr in (("w", net.weights[i]), ("b", net.biases[i])):
            flat = arr.reshape(-1)
            for j in range(flat.size):
                orig = flat[j]
                flat[j] = orig + h
                up = loss_value()
                flat[j] = orig - h
                down = loss_value()
                flat[j] = orig
                fd = (up - down) / (2 * h)
                an = grads[(kind, i)].reshape(-1)[j]
                assert abs(an - fd) / max(abs(an), abs(fd), 1e-6) < 1e-4


def test_gaussian_log_prob_at_mean():
    log_std = np.array([math.log(0.3), math.log(0.5), math.log(1.0)])
    mean = np.array([[0.1, -0.2, 0.4]])
    logp = gaussian_log_prob(mean, mean, log_std)
    expected = -log_std.sum() - 1.5 * math.log(2.0 * math.pi)
    assert logp[0] == pytest.approx(expected, rel=1e-12)


def test_sample_action_collapses_at_tiny_std():
    mean = np.array([[0.5, -1.0]])
    log_std = np.full(2, -40.0)
    action, _ = sample_action(mean, log_std, np.random.default_rng(5))
    np.testing.assert_allclose(action, mean, atol=1e-12)


def test_sample_action_deterministic_per_seed():
    mean = np.zeros((3, 4))
    log_std = np.full(4, math.log(0.3))
    a1, l1 = sample_action(mean, log_std, np.random.default_rng(6))
    a2, l2 = sample_action(mean, log_std, np.random.default_rng(6))
    assert np.array_equal(a1, a2)
    assert np.array_equal(l1, l2)


def test_gaussian_entropy_formula():
    log_std = np.array([0.1, -0.3])
    expected = 0.1 - 0.3 + 0.5 * 2 * (1 + math.log(2 * math.pi))
    assert gaussian_entropy(log_std) == pytest.approx(expected, rel=1e-12)


def test_orthogonal_init_columns():
    w = orthogonal_init(np.random.default_rng(7), 16, 8, gain=1.0,
                        dtype=np.float64)
    np.testing.assert_allclose(w.T @ w, np.eye(8), atol=1e-10)


def test_adam_minimizes_quadratic():
    params = {"x": np.array([10.0], dtype=np.float64)}
    opt = Adam(params)
    for _ in range(2000):
        grad = {"x": 2.0 * (params["x"] - 3.0)}
        opt.step(grad, lr=0.05)
    assert abs(params["x"][0] - 3.0) < 1e-3


def test_obs_normalizer_tracks_moments():
    rng = np.random.default_rng(8)
    data = rng.normal(loc=2.0, scale=3.0, size=(1000, 4))
    norm = ObsNormalizer(4)
    for chunk in np.array_split(data, 10):
        norm.update(chunk)
    # count starts at 1e-4, so moments match the stream almost exactly
    np.testing.assert_allclose(norm.mean, data.mean(axis=0), atol=1e-2)
    np.testing.assert_allclose(norm.var, data.var(axis=0), rtol=1e-2)
    scaled = norm.normalize(data)
    assert abs(float(scaled.mean())) < 0.05
    assert abs(float(scaled.std()) - 1.0) < 0.05


def test_obs_normalizer_freeze():
    norm = ObsNormalizer(2)
    norm.update(np.ones((10, 2)))
    frozen_mean = norm.mean.copy()
    norm.frozen = True
    norm.update(np.full((10, 2), 100.0))
    assert np.array_equal(norm.mean, frozen_mean)


def test_normalizer_clips_outliers():
    norm = ObsNormalizer(1)
    norm.update(np.random.default_rng(9).normal(size=(100, 1)))
    assert float(norm.normalize(np.array([1e9]))[0]) == 10.0
