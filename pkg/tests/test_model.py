import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flrce.data import Dataset
from flrce.errors import ClientSkip, ConfigurationError
from flrce.model import (
    ClientState,
    ModelSpec,
    TrainConfig,
    forward_loss,
    gradient,
    init_params,
    local_train,
)


def scalar_loss(params, spec, xs, ys):
    """Pure-Python recomputation: explicit loops over layers, units and samples."""
    sizes = spec.layer_sizes
    layers = []
    off = 0
    for fi, fo in zip(sizes[:-1], sizes[1:]):
        w = [[params[off + i * fo + j] for j in range(fo)] for i in range(fi)]
        off += fi * fo
        b = [params[off + j] for j in range(fo)]
        off += fo
        layers.append((w, b))
    total = 0.0
    for x, y in zip(xs, ys):
        a = list(x)
        for li, (w, b) in enumerate(layers):
            z = [b[j] + sum(a[i] * w[i][j] for i in range(len(a))) for j in range(len(b))]
            if li < len(layers) - 1:
                a = [max(v, 0.0) if spec.activation == "relu" else math.tanh(v) for v in z]
            else:
                a = z
        m = max(a)
        lse = m + math.log(sum(math.exp(v - m) for v in a))
        total += lse - a[y]
    return total / len(ys)


def central_differences(params, spec, x, y, h=1e-5):
    g = np.zeros_like(params)
    for i in range(params.size):
        e = np.zeros_like(params)
        e[i] = h
        g[i] = (forward_loss(params + e, spec, x, y) - forward_loss(params - e, spec, x, y)) / (2 * h)
    return g


def random_triple(rng):
    spec = ModelSpec(
        input_dim=int(rng.integers(1, 5)),
        hidden_dims=tuple(int(h) for h in rng.integers(1, 6, size=rng.integers(0, 3))),
        output_classes=int(rng.integers(2, 5)),
        activation=str(rng.choice(["relu", "tanh"])),
    )
    params = rng.normal(0, 1, spec.num_params)
    n = int(rng.integers(1, 7))
    x = rng.normal(0, 1, (n, spec.input_dim))
    y = rng.integers(0, spec.output_classes, n)
    return spec, params, x, y


class TestForwardLoss:
    def test_uniform_logits_give_log_classes(self):
        spec = ModelSpec(3, (4,), 4)
        params = np.zeros(spec.num_params)
        x = np.random.default_rng(0).normal(size=(5, 3))
        assert forward_loss(params, spec, x, np.array([0, 1, 2, 3, 0])) == pytest.approx(math.log(4), abs=1e-12)

    def test_zero_hidden_weights_make_loss_input_independent(self):
        spec = ModelSpec(2, (3,), 3, "tanh")
        rng = np.random.default_rng(1)
        params = rng.normal(size=spec.num_params)
        params[: 2 * 3] = 0.0  # first-layer weights
        y = np.array([0, 2, 1])
        a = forward_loss(params, spec, rng.normal(size=(3, 2)), y)
        b = forward_loss(params, spec, 100 * rng.normal(size=(3, 2)), y)
        assert a == pytest.approx(b, abs=1e-12)

    def test_matches_scalar_oracle_on_8_param_net(self):
        spec = ModelSpec(3, (), 2)
        assert spec.num_params == 8
        rng = np.random.default_rng(7)
        params = rng.normal(size=8)
        x = rng.normal(size=(3, 3))
        y = np.array([1, 0, 1])
        assert forward_loss(params, spec, x, y) == pytest.approx(scalar_loss(params, spec, x, y), abs=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_scalar_oracle_with_hidden_layers(self, seed):
        spec, params, x, y = random_triple(np.random.default_rng(seed))
        assert forward_loss(params, spec, x, y) == pytest.approx(scalar_loss(params, spec, x, y), abs=1e-12)

    def test_dimension_mismatch(self):
        spec = ModelSpec(3, (), 2)
        with pytest.raises(ConfigurationError):
            forward_loss(np.zeros(8), spec, np.zeros((2, 4)), np.array([0, 1]))
        with pytest.raises(ConfigurationError):
            forward_loss(np.zeros(9), spec, np.zeros((2, 3)), np.array([0, 1]))
        with pytest.raises(ConfigurationError):
            forward_loss(np.zeros(8), spec, np.zeros((2, 3)), np.array([0, 2]))


class TestGradient:
    def test_finite_difference_agreement(self):
        rng = np.random.default_rng(2024)
        worst = 0.0
        for _ in range(100):
            spec, params, x, y = random_triple(rng)
            g = gradient(params, spec, x, y)
            fd = central_differences(params, spec, x, y)
            rel = np.linalg.norm(g - fd) / max(np.linalg.norm(g), np.linalg.norm(fd), 1e-12)
            worst = max(worst, rel)
        assert worst < 1e-4

    def test_vanishes_at_convex_minimum(self):
        scipy_opt = pytest.importorskip("scipy.optimize")
        rng = np.random.default_rng(3)
        spec = ModelSpec(2, (), 2)
        # overlapping classes, so the logistic optimum is finite
        x = rng.normal(0, 1, (40, 2))
        y = (x[:, 0] + rng.normal(0, 1.5, 40) > 0).astype(int)
        res = scipy_opt.minimize(
            lambda p: forward_loss(p, spec, x, y),
            np.zeros(spec.num_params),
            jac=lambda p: gradient(p, spec, x, y),
            method="BFGS",
            options={"gtol": 1e-10},
        )
        assert np.linalg.norm(gradient(res.x, spec, x, y)) < 1e-6

    def test_class_swap_symmetry(self):
        # Swapping the two output units and the labels permutes the gradient
        # the same way, also after doubling both output columns.
        spec = ModelSpec(2, (), 2)
        rng = np.random.default_rng(4)
        w = rng.normal(size=(2, 2))
        b = rng.normal(size=2)
        x = rng.normal(size=(6, 2))
        y = rng.integers(0, 2, 6)
        for scale in (1.0, 2.0):
            p = np.concatenate([(scale * w).ravel(), b])
            ps = np.concatenate([(scale * w[:, ::-1]).ravel(), b[::-1]])
            g = gradient(p, spec, x, y)
            gs = gradient(ps, spec, x, 1 - y)
            gw, gb = g[:4].reshape(2, 2), g[4:]
            gsw, gsb = gs[:4].reshape(2, 2), gs[4:]
            np.testing.assert_allclose(gw[:, ::-1], gsw, atol=1e-14)
            np.testing.assert_allclose(gb[::-1], gsb, atol=1e-14)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_shape_and_finite(self, seed):
        spec, params, x, y = random_triple(np.random.default_rng(seed))
        g = gradient(100 * params, spec, 100 * x, y)
        assert g.shape == (spec.num_params,)
        assert np.all(np.isfinite(g))


def make_client(n=20, seed=0, cfg=TrainConfig(0.1, 1, 16), dim=3, classes=3):
    rng = np.random.default_rng(seed)
    data = Dataset(rng.uniform(0, 1, (n, dim)), rng.integers(0, classes, n), classes)
    return ClientState(5, data, cfg)


class TestLocalTrain:
    def test_single_full_batch_epoch_is_one_gradient_step(self):
        spec = ModelSpec(3, (4,), 3)
        client = make_client(cfg=TrainConfig(0.1, 1, 20))
        w = init_params(spec, 0)
        u = local_train(w, client, spec, seed=1, round=1)
        expected = -0.1 * gradient(w, spec, client.data.features, client.data.labels)
        np.testing.assert_allclose(u, expected, rtol=0, atol=1e-12)

    @pytest.mark.parametrize("epochs,batch", [(1, 1), (3, 4), (5, 16)])
    def test_zero_learning_rate_gives_zero_update(self, epochs, batch):
        spec = ModelSpec(3, (4,), 3)
        client = make_client(cfg=TrainConfig(0.0, epochs, batch))
        u = local_train(init_params(spec, 0), client, spec)
        assert np.array_equal(u, np.zeros(spec.num_params))

    def test_replay_is_bit_identical(self):
        spec = ModelSpec(3, (8,), 3)
        client = make_client(n=50, cfg=TrainConfig(0.05, 5, 16))
        w = init_params(spec, 9)
        a = local_train(w, client, spec, seed=42, round=3)
        b = local_train(w, client, spec, seed=42, round=3)
        assert a.tobytes() == b.tobytes()
        c = local_train(w, client, spec, seed=42, round=4)
        assert not np.array_equal(a, c)

    def test_full_batch_descent_on_normalized_data(self):
        spec = ModelSpec(3, (6,), 3, "tanh")
        client = make_client(n=30, cfg=TrainConfig(1e-3, 1, 30))
        x, y = client.data.features, client.data.labels
        w = init_params(spec, 2)
        losses = [forward_loss(w, spec, x, y)]
        for _ in range(20):
            w = w + local_train(w, client, spec)
            losses.append(forward_loss(w, spec, x, y))
        assert all(b < a for a, b in zip(losses, losses[1:]))

    def test_empty_dataset_signals_skip(self):
        spec = ModelSpec(3, (), 3)
        empty = ClientState(0, Dataset(np.zeros((0, 3)), np.zeros(0, dtype=int), 3))
        with pytest.raises(ClientSkip):
            local_train(np.zeros(spec.num_params), empty, spec)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(1, 8))
    def test_update_shape_and_finite(self, seed, epochs, batch):
        rng = np.random.default_rng(seed)
        spec, params, _, _ = random_triple(rng)
        n = int(rng.integers(1, 12))
        data = Dataset(rng.uniform(0, 1, (n, spec.input_dim)), rng.integers(0, spec.output_classes, n), spec.output_classes)
        u = local_train(params, ClientState(0, data, TrainConfig(0.05, epochs, batch)), spec, seed=seed % 1000)
        assert u.shape == params.shape and np.all(np.isfinite(u))


def test_init_is_seeded_and_bounded():
    spec = ModelSpec(4, (9,), 3)
    a, b = init_params(spec, 11), init_params(spec, 11)
    assert np.array_equal(a, b)
    assert np.all(np.abs(a[: 4 * 9]) <= 1 / math.sqrt(4))
    assert np.all(np.abs(a[4 * 9 + 9 : 4 * 9 + 9 + 27]) <= 1 / 3)
