"""Autoencoder gradients are validated coordinate-by-coordinate against
central finite differences, with each loss term switched on in isolation
before testing the combined objective."""

import numpy as np
import pytest

from meshwave.encoder import (
    FeatureMatrix,
    SdaeConfig,
    concat_features,
    corrupt,
    encode_features,
    forward,
    grad,
    init_params,
    load_params,
    loss,
    loss_terms,
    save_params,
    train,
)


def fd_check(config, seed, n_coords=6, h=1e-5):
    """Max relative error between analytic and central-difference
    gradients over a deterministic sample of coordinates."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((9, config.layer_sizes[0]))
    target = rng.standard_normal(x.shape)
    params = init_params(config, rng)
    gw, gb = grad(params, x, target, config)
    worst = 0.0
    for l in range(params.n_layers):
        w = params.weights[l]
        coords = [(int(rng.integers(w.shape[0])), int(rng.integers(w.shape[1]))) for _ in range(n_coords)]
        for i, j in coords:
            keep = w[i, j]
            w[i, j] = keep + h
            up = loss(params, x, target, config)
            w[i, j] = keep - h
            dn = loss(params, x, target, config)
            w[i, j] = keep
            fd = (up - dn) / (2 * h)
            denom = max(abs(fd), abs(gw[l][i, j]), 1e-8)
            worst = max(worst, abs(fd - gw[l][i, j]) / denom)
        b = params.biases[l]
        for j in [int(rng.integers(b.size)) for _ in range(min(n_coords, b.size))]:
            keep = b[j]
            b[j] = keep + h
            up = loss(params, x, target, config)
            b[j] = keep - h
            dn = loss(params, x, target, config)
            b[j] = keep
            fd = (up - dn) / (2 * h)
            denom = max(abs(fd), abs(gb[l][j]), 1e-8)
            worst = max(worst, abs(fd - gb[l][j]) / denom)
    return worst


class TestGradient:
    ARCH = (10, 8, 5, 3)

    def test_reconstruction_term_only(self):
        cfg = SdaeConfig(layer_sizes=self.ARCH, sparsity_weight=0.0, weight_decay=0.0)
        assert fd_check(cfg, seed=0) < 1e-6

    def test_weight_decay_term(self):
        cfg = SdaeConfig(layer_sizes=self.ARCH, sparsity_weight=0.0, weight_decay=0.01)
        assert fd_check(cfg, seed=1) < 1e-6

    def test_sparsity_term(self):
        cfg = SdaeConfig(layer_sizes=self.ARCH, sparsity_weight=0.5, weight_decay=0.0, rho=0.05)
        assert fd_check(cfg, seed=2) < 1e-6

    def test_combined_objective(self):
        cfg = SdaeConfig(layer_sizes=self.ARCH, sparsity_weight=0.1, weight_decay=0.00055, rho=0.001)
        for seed in range(5):
            assert fd_check(cfg, seed=seed) < 1e-5


class TestForward:
    def test_shapes_and_mirroring(self):
        cfg = SdaeConfig(layer_sizes=(12, 6, 2))
        params = init_params(cfg, np.random.default_rng(0))
        assert params.dims == [12, 6, 2, 6, 12]
        assert params.code_layer == 2
        acts = forward(params, np.zeros((4, 12)))
        assert [a.shape[1] for a in acts] == [12, 6, 2, 6, 12]

    def test_hidden_layers_bounded_output_linear(self):
        cfg = SdaeConfig(layer_sizes=(4, 3))
        params = init_params(cfg, np.random.default_rng(1))
        x = 1e4 * np.random.default_rng(2).standard_normal((5, 4))
        acts = forward(params, x)
        assert np.abs(acts[1]).max() < np.pi / 2  # arctan code
        z = acts[1] @ params.weights[1] + params.biases[1]
        np.testing.assert_array_equal(acts[2], z)  # untouched by the squash
        assert not np.allclose(acts[2], np.arctan(z))

    def test_loss_is_sum_of_terms(self):
        cfg = SdaeConfig(layer_sizes=(6, 4, 2), sparsity_weight=0.3, weight_decay=0.01)
        rng = np.random.default_rng(3)
        params = init_params(cfg, rng)
        x = rng.standard_normal((7, 6))
        terms = loss_terms(params, x, x, cfg)
        assert abs(loss(params, x, x, cfg) - sum(terms)) < 1e-14
        assert all(t >= 0 for t in terms[:2])


class TestCorruption:
    def test_mask_zeroes_expected_fraction(self):
        rng = np.random.default_rng(4)
        x = np.ones((200, 50))
        noisy = corrupt(x, 0.2, rng, "mask")
        frac = float((noisy == 0).mean())
        assert 0.17 < frac < 0.23
        assert set(np.unique(noisy)) <= {0.0, 1.0}

    def test_zero_level_copies(self):
        x = np.arange(6.0).reshape(2, 3)
        out = corrupt(x, 0.0, np.random.default_rng(0))
        np.testing.assert_array_equal(out, x)
        assert out is not x

    def test_column_mode_drops_whole_units(self):
        rng = np.random.default_rng(5)
        x = np.ones((30, 40))
        noisy = corrupt(x, 0.3, rng, "column")
        col_zero = (noisy == 0).all(axis=0)
        col_kept = (noisy == 1).all(axis=0)
        assert np.all(col_zero | col_kept)
        assert col_zero.any() and col_kept.any()

    def test_same_seed_same_mask(self):
        x = np.random.default_rng(6).standard_normal((10, 10))
        a = corrupt(x, 0.5, np.random.default_rng(99))
        b = corrupt(x, 0.5, np.random.default_rng(99))
        np.testing.assert_array_equal(a, b)


class TestTraining:
    def test_objective_decreases_and_settles(self):
        rng = np.random.default_rng(7)
        x = rng.standard_normal((20, 10))
        cfg = SdaeConfig(layer_sizes=(10, 6, 3), epochs=120, corruption=0.1, learning_rate=0.02)
        result = train(x, cfg, seed=0)
        traj = result.trajectory
        assert traj.shape == (120,)
        assert traj[-1] < traj[0]
        # after the early transient the clean objective should not climb back
        later = traj[10:]
        assert np.all(np.diff(later) <= 1e-3 * np.abs(later[:-1]) + 1e-9)

    def test_training_is_deterministic(self):
        x = np.random.default_rng(8).standard_normal((12, 6))
        cfg = SdaeConfig(layer_sizes=(6, 4, 2), epochs=30)
        r1 = train(x, cfg, seed=5)
        r2 = train(x, cfg, seed=5)
        for w1, w2 in zip(r1.params.weights, r2.params.weights):
            np.testing.assert_array_equal(w1, w2)
        np.testing.assert_array_equal(r1.trajectory, r2.trajectory)

    def test_input_width_checked(self):
        cfg = SdaeConfig(layer_sizes=(5, 2))
        with pytest.raises(ValueError, match="input width"):
            train(np.zeros((4, 6)), cfg)


class TestCodesAndIO:
    def test_encode_features_is_bottleneck_activation(self):
        cfg = SdaeConfig(layer_sizes=(8, 5, 2))
        rng = np.random.default_rng(9)
        params = init_params(cfg, rng)
        x = rng.standard_normal((6, 8))
        codes = encode_features(params, x)
        np.testing.assert_array_equal(codes.features, forward(params, x)[2])
        assert codes.n_features == 2

    def test_concat_features(self):
        a = FeatureMatrix(np.ones((4, 2)))
        b = FeatureMatrix(np.zeros((4, 3)))
        fused = concat_features([a, b])
        assert fused.features.shape == (4, 5)
        with pytest.raises(ValueError, match="row counts"):
            concat_features([a, FeatureMatrix(np.zeros((5, 1)))])

    def test_params_round_trip(self, tmp_path):
        cfg = SdaeConfig(layer_sizes=(7, 4, 3))
        params = init_params(cfg, np.random.default_rng(10))
        path = tmp_path / "net.bin"
        save_params(path, params)
        loaded = load_params(path)
        assert loaded.dims == params.dims
        for w1, w2 in zip(params.weights, loaded.weights):
            np.testing.assert_array_equal(w1, w2)
        for b1, b2 in zip(params.biases, loaded.biases):
            np.testing.assert_array_equal(b1, b2)

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"NOPE" + b"\0" * 64)
        with pytest.raises(ValueError, match="not a saved autoencoder"):
            load_params(path)


class TestConfigValidation:
    def test_bounds(self):
        with pytest.raises(ValueError):
            SdaeConfig(layer_sizes=(5,))
        with pytest.raises(ValueError):
            SdaeConfig(layer_sizes=(5, 2), rho=0.0)
        with pytest.raises(ValueError):
            SdaeConfig(layer_sizes=(5, 2), corruption=1.0)
        with pytest.raises(ValueError):
            SdaeConfig(layer_sizes=(5, 2), corruption_mode="swap")
        with pytest.raises(ValueError):
            SdaeConfig(layer_sizes=(5, 2), learning_rate=0.0)

    def test_chain_property(self):
        cfg = SdaeConfig(layer_sizes=(9, 4, 2))
        assert cfg.chain == (9, 4, 2, 4, 9)
        assert cfg.n_encoder_layers == 2
        assert cfg.code_size == 2
