import numpy as np
import pytest

from aenet import nn


def finite_difference_grads(net, inputs, targets, weights=None, step=1e-5):
    """Central-difference gradient oracle over every parameter entry."""
    grads = []
    for p in net.params():
        g = np.zeros_like(p)
        flat = p.ravel()
        gflat = g.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            lp, _ = nn.mse_and_grad(net, inputs, targets, weights)
            flat[i] = orig - step
            lm, _ = nn.mse_and_grad(net, inputs, targets, weights)
            flat[i] = orig
            gflat[i] = (lp - lm) / (2 * step)
        grads.append(g)
    return grads


class TestInitAndForward:
    def test_init_deterministic(self):
        a = nn.mlp_init([3, 1], seed=9)
        b = nn.mlp_init([3, 1], seed=9)
        for (Wa, ba), (Wb, bb) in zip(a.layers, b.layers):
            assert np.array_equal(Wa, Wb)
            assert np.array_equal(ba, bb)

    def test_init_bounds_and_bias(self):
        net = nn.mlp_init([512, 500, 500, 500, 500, 2], seed=0)
        assert net.dims == [512, 500, 500, 500, 500, 2]
        for W, b in net.layers:
            assert np.all(np.abs(W) <= np.sqrt(6.0 / W.shape[1]))
            assert np.all(b == 0)

    def test_init_rejects_bad_dims(self):
        with pytest.raises(ValueError):
            nn.mlp_init([], seed=0)
        with pytest.raises(ValueError):
            nn.mlp_init([3, 0, 1], seed=0)

    def test_identity_single_layer(self):
        net = nn.MLP([(np.eye(2), np.zeros(2))])
        x = np.array([1.5, 0.25])
        assert np.allclose(nn.forward(net, x), x)

    def test_zero_weight_net_outputs_bias(self):
        net = nn.MLP([(np.zeros((2, 3)), np.array([4.0, -1.0]))])
        assert np.allclose(nn.forward(net, np.ones(3)), [4.0, -1.0])

    def test_affine_map(self):
        net = nn.MLP([(np.array([[2.0]]), np.array([1.0]))])
        assert nn.forward(net, np.array([3.0]))[0] == 7.0

    def test_relu_kink(self):
        # two layers so the hidden ReLU is exercised: out = relu(x)
        net = nn.MLP([(np.array([[1.0]]), np.zeros(1)),
                      (np.array([[1.0]]), np.zeros(1))])
        assert nn.forward(net, np.array([-1.0]))[0] == 0.0
        assert nn.forward(net, np.array([2.0]))[0] == 2.0

    def test_batch_matches_single(self):
        net = nn.mlp_init([4, 8, 3], seed=1)
        xs = np.random.default_rng(2).standard_normal((5, 4))
        batch = nn.forward(net, xs)
        for i in range(5):
            assert np.allclose(batch[i], nn.forward(net, xs[i]))

    def test_positive_homogeneity_with_zero_bias(self):
        net = nn.mlp_init([3, 6, 6, 2], seed=3)
        x = np.random.default_rng(4).standard_normal(3)
        assert np.allclose(nn.forward(net, 2.5 * x), 2.5 * nn.forward(net, x))

    def test_shape_mismatch(self):
        net = nn.mlp_init([3, 2], seed=0)
        with pytest.raises(ValueError):
            nn.forward(net, np.ones(4))


class TestLossAndGrad:
    def test_perfect_fit_zero_loss(self):
        net = nn.MLP([(np.eye(2), np.zeros(2))])
        x = np.abs(np.random.default_rng(0).standard_normal((4, 2)))
        loss, grads = nn.mse_and_grad(net, x, x)
        assert loss == 0.0
        assert all(np.all(g == 0) for g in grads)

    def test_hand_computed_scalar(self):
        net = nn.MLP([(np.array([[2.0]]), np.zeros(1))])
        loss, grads = nn.mse_and_grad(net, np.array([[1.0]]), np.array([[0.0]]))
        assert loss == 4.0
        assert grads[0][0, 0] == 4.0

    def test_empty_batch_rejected(self):
        net = nn.mlp_init([2, 1], seed=0)
        with pytest.raises(ValueError):
            nn.mse_and_grad(net, np.zeros((0, 2)), np.zeros((0, 1)))

    def test_uniform_weights_scale_mse(self):
        net = nn.mlp_init([3, 5, 2], seed=0)
        rng = np.random.default_rng(1)
        x = rng.standard_normal((6, 3))
        y = rng.standard_normal((6, 2))
        plain, _ = nn.mse_and_grad(net, x, y)
        weighted, _ = nn.mse_and_grad(net, x, y, sample_weights=np.full(2, 0.25))
        assert weighted == pytest.approx(0.25 * plain, rel=1e-15)

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(12)
        for trial in range(20):
            n_layers = rng.integers(1, 4)
            dims = [int(rng.integers(1, 9)) for _ in range(n_layers + 1)]
            net = nn.mlp_init(dims, seed=100 + trial)
            # random parameters so ReLU patterns vary
            for W, b in net.layers:
                W += 0.1 * rng.standard_normal(W.shape)
                b += 0.1 * rng.standard_normal(b.shape)
            x = rng.standard_normal((4, dims[0]))
            y = rng.standard_normal((4, dims[-1]))
            w = rng.uniform(0.5, 2.0, dims[-1]) if trial % 2 else None
            _, analytic = nn.mse_and_grad(net, x, y, w)
            numeric = finite_difference_grads(net, x, y, w)
            for ga, gn in zip(analytic, numeric):
                assert np.allclose(ga, gn, rtol=1e-5, atol=1e-8)


class TestAdam:
    def test_zero_gradient_keeps_params(self):
        params = [np.array([1.0, 2.0])]
        state = nn.AdamState.for_params(params)
        nn.adam_step(params, [np.zeros(2)], state, lr=1e-3)
        assert np.array_equal(params[0], [1.0, 2.0])
        assert state.t == 1

    def test_first_step_magnitude_is_lr(self):
        # m_hat/sqrt(v_hat) = sign(g) on the first step
        params = [np.array([1.0])]
        state = nn.AdamState.for_params(params)
        nn.adam_step(params, [np.array([2.0])], state, lr=1e-3)
        assert params[0][0] == pytest.approx(0.999, abs=1e-6)

    def test_constant_gradient_moves_monotonically(self):
        params = [np.array([0.0])]
        state = nn.AdamState.for_params(params)
        prev = 0.0
        for _ in range(5):
            nn.adam_step(params, [np.array([3.0])], state, lr=0.01)
            assert params[0][0] < prev
            prev = params[0][0]


class TestTrain:
    def test_fit_linear_function(self):
        rng = np.random.default_rng(0)
        x = rng.uniform(-1, 1, (100, 1))
        y = 2 * x
        net = nn.mlp_init([1, 16, 1], seed=0)
        cfg = nn.TrainConfig(epochs=300, learning_rate=1e-2, batch_size=16, seed=0)
        net, history = nn.train(net, x, y, cfg)
        assert history[-1] < 1e-3

    def test_zero_epochs_is_identity(self):
        net = nn.mlp_init([2, 4, 1], seed=0)
        before = [p.copy() for p in net.params()]
        cfg = nn.TrainConfig(epochs=0, seed=0)
        net, history = nn.train(net, np.ones((3, 2)), np.ones((3, 1)), cfg)
        assert history == []
        for p, q in zip(net.params(), before):
            assert np.array_equal(p, q)

    def test_seed_reproducibility(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal((40, 3))
        y = rng.standard_normal((40, 2))
        cfg = nn.TrainConfig(epochs=5, batch_size=8, seed=11)
        _, h1 = nn.train(nn.mlp_init([3, 8, 2], seed=7), x, y, cfg)
        _, h2 = nn.train(nn.mlp_init([3, 8, 2], seed=7), x, y, cfg)
        assert h1 == h2

    def test_convex_problem_eventually_nonincreasing(self):
        rng = np.random.default_rng(5)
        x = rng.standard_normal((64, 2))
        y = x @ np.array([[1.0], [-2.0]])
        net = nn.MLP([(np.zeros((1, 2)), np.zeros(1))])
        cfg = nn.TrainConfig(epochs=60, learning_rate=1e-2, batch_size=64,
                             seed=0, shuffle=False)
        _, history = nn.train(net, x, y, cfg)
        tail = history[20:]
        assert all(b <= a + 1e-12 for a, b in zip(tail, tail[1:]))

    def test_divergence_reported(self):
        net = nn.mlp_init([1, 4, 1], seed=0)
        cfg = nn.TrainConfig(epochs=5, learning_rate=1e90, seed=0)
        with pytest.raises(nn.DivergenceError, match="epoch"):
            nn.train(net, np.ones((8, 1)), np.full((8, 1), 1e30), cfg)

    def test_composite_matches_joint_reconstruction(self):
        rng = np.random.default_rng(8)
        x = rng.standard_normal((30, 4))
        enc = nn.mlp_init([4, 6, 2], seed=1)
        dec = nn.mlp_init([2, 6, 4], seed=2)
        cfg = nn.TrainConfig(epochs=50, batch_size=8, seed=3)
        (enc, dec), history = nn.train_composite([enc, dec], x, x, cfg)
        assert np.isfinite(history[-1])
        assert history[-1] < history[0]


class TestNetworkClassStats:
    def test_parameter_counting(self):
        net = nn.mlp_init([2, 3, 1], seed=0)
        for _, b in net.layers:
            b += 1.0  # make biases nonzero so K counts every parameter
        stats = nn.network_class_stats(net, np.zeros((1, 2)))
        assert stats.depth == 2
        assert stats.width == 3
        assert stats.nonzero_params == 13

    def test_zero_net(self):
        net = nn.MLP([(np.zeros((2, 2)), np.zeros(2))])
        stats = nn.network_class_stats(net, np.ones((3, 2)))
        assert stats.max_abs_param == 0.0
        assert stats.sup_norm == 0.0
        assert stats.nonzero_params == 0

    def test_sup_norm_over_probes(self):
        net = nn.MLP([(np.array([[1.0]]), np.zeros(1))])
        stats = nn.network_class_stats(net, np.array([[-3.0], [2.0]]))
        assert stats.sup_norm == 3.0


class TestCheckpoints:
    def test_round_trip(self, tmp_path):
        net = nn.mlp_init([5, 7, 3], seed=4)
        path = tmp_path / "net.mlp"
        nn.save_mlp(net, path)
        loaded = nn.load_mlp(path)
        assert loaded.dims == net.dims
        for (Wa, ba), (Wb, bb) in zip(net.layers, loaded.layers):
            assert np.array_equal(Wa, Wb)
            assert np.array_equal(ba, bb)

    def test_magic_check(self, tmp_path):
        path = tmp_path / "junk"
        path.write_bytes(b"nope" + b"\0" * 64)
        with pytest.raises(ValueError, match="checkpoint"):
            nn.load_mlp(path)

    def test_loss_history_csv(self, tmp_path):
        path = tmp_path / "loss.csv"
        nn.save_loss_history([0.5, 0.25], path)
        lines = path.read_text().splitlines()
        assert lines[0] == "epoch,loss"
        assert lines[1] == "0,0.5"
