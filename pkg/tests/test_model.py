import os

import numpy as np
import numpy.testing as npt
import pytest

from exsplinet import bspline
from exsplinet.errors import (
    DegenerateWeightsError,
    InvalidHyperparameterError,
    OutOfDomainError,
    ShapeMismatchError,
)
from exsplinet.model import (
    ExSpliNetModel,
    InnerWeights,
    ModelConfig,
    OuterWeights,
    init_convex,
    init_coordinate_select,
    init_identity,
    init_random,
    load_checkpoint,
    param_count,
    reparam,
    save_checkpoint,
)


def small_config(**overrides):
    base = dict(D=3, O=2, T=2, L=2, N=(4, 3), M=(3, 4), p=(2, 2), q=(2, 2))
    base.update(overrides)
    return ModelConfig(**base)


class TestConfig:
    def test_validation(self):
        with pytest.raises(InvalidHyperparameterError):
            small_config(N=(2, 3), p=(2, 2))  # N must exceed p
        with pytest.raises(InvalidHyperparameterError):
            small_config(N=(4,))  # wrong length
        with pytest.raises(InvalidHyperparameterError):
            ModelConfig(D=0, O=1, T=1, L=1, N=(2,), M=(2,), p=(1,), q=(1,))

    def test_param_count_reference_values(self):
        iris = ModelConfig(D=4, O=3, T=1, L=2, N=(2, 2), M=(2, 3), p=(1, 1), q=(1, 1))
        assert param_count(iris) == 34
        mnist1 = ModelConfig(
            D=784, O=10, T=50, L=2, N=(2, 2), M=(2, 2), p=(1, 1), q=(1, 1)
        )
        assert param_count(mnist1) == 158800


class TestReparam:
    def test_simplex(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            u = rng.standard_normal((3, 4))
            v = reparam(u)
            assert np.all(v >= 0)
            npt.assert_allclose(v.sum(), 1.0, atol=1e-12)

    def test_scale_invariance(self):
        u = np.array([1.0, 2.0, -3.0])
        npt.assert_allclose(reparam(u), reparam(5.0 * u), atol=1e-15)

    def test_zero_block_rejected(self):
        with pytest.raises(DegenerateWeightsError):
            reparam(np.zeros(4))


class TestForward:
    def test_constant_outer_gives_T_times_constant(self):
        cfg = small_config()
        m = init_random(cfg, seed=1)
        m.outer.w[:] = 0.7
        X = np.random.default_rng(2).uniform(0, 1, size=(10, cfg.D))
        npt.assert_allclose(m.forward_batch(X), cfg.T * 0.7, atol=1e-12)

    def test_identity_composition_reproduces_coordinate(self):
        # identity inner + Greville outer on level 1 => model(x) = x_1
        cfg = ModelConfig(D=2, O=1, T=1, L=2, N=(4, 4), M=(5, 5), p=(3, 3), q=(3, 3))
        inner = init_identity(cfg)
        w = np.zeros((1, 1, 5, 5))
        w[0, 0] = bspline.greville(5, 3)[:, None]  # varies along axis 1 only
        m = ExSpliNetModel(cfg, inner, OuterWeights(w))
        X = np.random.default_rng(3).uniform(0, 1, size=(50, 2))
        npt.assert_allclose(m.forward_batch(X)[:, 0], X[:, 0], atol=1e-12)

    def test_features_in_unit_interval(self):
        rng = np.random.default_rng(4)
        for trial in range(100):
            cfg = small_config()
            m = init_random(cfg, seed=trial)
            X = rng.uniform(0, 1, size=(10, cfg.D))
            Y = m.features_batch(X)
            assert np.all(Y >= 0.0) and np.all(Y <= 1.0)

    def test_out_of_domain_rejected(self):
        m = init_random(small_config(), seed=0)
        with pytest.raises(OutOfDomainError):
            m.forward(np.array([0.5, 0.5, 1.2]))

    def test_shape_mismatch_rejected(self):
        m = init_random(small_config(), seed=0)
        with pytest.raises(ShapeMismatchError):
            m.forward_batch(np.ones((3, 5)))


class TestInitializers:
    def test_identity_features(self):
        cfg = ModelConfig(D=3, O=1, T=2, L=3, N=(4, 5, 3), M=(3, 3, 3),
                          p=(2, 3, 1), q=(1, 1, 1))
        inner = init_identity(cfg)
        w = np.zeros((1, 2, 3, 3, 3))
        m = ExSpliNetModel(cfg, inner, OuterWeights(w))
        rng = np.random.default_rng(5)
        for _ in range(20):
            x = rng.uniform(0, 1, size=3)
            for t in (1, 2):
                for level in (1, 2, 3):
                    npt.assert_allclose(
                        m.inner_feature(t, level, x), x[level - 1], atol=1e-12
                    )

    def test_coordinate_select(self):
        cfg = ModelConfig(D=4, O=1, T=2, L=2, N=(3, 3), M=(3, 3), p=(2, 2), q=(1, 1))
        sigma = [[2, 4], [1, 3]]
        inner = init_coordinate_select(cfg, sigma)
        m = ExSpliNetModel(cfg, inner, OuterWeights(np.zeros((1, 2, 3, 3))))
        x = np.array([0.1, 0.4, 0.7, 0.9])
        for t in (1, 2):
            for level in (1, 2):
                npt.assert_allclose(
                    m.inner_feature(t, level, x), x[sigma[t - 1][level - 1] - 1],
                    atol=1e-12,
                )

    def test_convex_combination(self):
        cfg = ModelConfig(D=3, O=1, T=1, L=2, N=(2, 2), M=(2, 2), p=(1, 1), q=(1, 1))
        nu = np.array([[[0.5, 0.25, 0.25], [0.0, 1.0, 0.0]]])
        inner = init_convex(cfg, nu)
        assert not inner.frozen.any()  # grand sums are 1, so still trainable
        m = ExSpliNetModel(cfg, inner, OuterWeights(np.zeros((1, 1, 2, 2))))
        x = np.array([0.2, 0.6, 0.8])
        npt.assert_allclose(m.inner_feature(1, 1, x), nu[0, 0] @ x, atol=1e-12)
        npt.assert_allclose(m.inner_feature(1, 2, x), x[1], atol=1e-12)

    def test_identity_blocks_frozen(self):
        cfg = ModelConfig(D=2, O=1, T=1, L=2, N=(4, 4), M=(3, 3), p=(2, 2), q=(1, 1))
        inner = init_identity(cfg)
        assert inner.frozen.all()  # Greville sums differ from 1

    def test_random_outputs_bounded(self):
        cfg = small_config()
        rng = np.random.default_rng(6)
        for seed in range(20):
            m = init_random(cfg, seed=seed)
            X = rng.uniform(0, 1, size=(20, cfg.D))
            assert np.all(np.abs(m.forward_batch(X)) <= 1.0 + 1e-12)


class TestFlatParams:
    def test_round_trip(self):
        m = init_random(small_config(), seed=7)
        theta = m.flat_params()
        assert theta.size == param_count(m.config)
        m2 = init_random(small_config(), seed=8)
        m2.set_flat_params(theta)
        npt.assert_array_equal(m2.flat_params(), theta)

    def test_trainable_mask_frozen_blocks(self):
        cfg = ModelConfig(D=2, O=1, T=1, L=2, N=(3, 3), M=(3, 3), p=(2, 2), q=(1, 1))
        inner = init_identity(cfg)
        m = ExSpliNetModel(cfg, inner, OuterWeights(np.zeros((1, 1, 3, 3))))
        mask = m.trainable_mask()
        n_inner = cfg.D * cfg.T * sum(cfg.N)
        assert not mask[:n_inner].any()
        assert mask[n_inner:].all()


class TestCheckpoint:
    def test_bit_exact_round_trip(self, tmp_path):
        m = init_random(small_config(), seed=9)
        path = os.path.join(tmp_path, "model.esn")
        save_checkpoint(m, path)
        m2 = load_checkpoint(path)
        npt.assert_array_equal(m.flat_params(), m2.flat_params())
        assert m2.config == m.config
        npt.assert_array_equal(m.inner.frozen, m2.inner.frozen)

    def test_frozen_blocks_survive(self, tmp_path):
        cfg = ModelConfig(D=2, O=1, T=1, L=2, N=(3, 3), M=(3, 3), p=(2, 2), q=(1, 1))
        m = ExSpliNetModel(cfg, init_identity(cfg), OuterWeights(np.ones((1, 1, 3, 3))))
        path = os.path.join(tmp_path, "model.esn")
        save_checkpoint(m, path)
        m2 = load_checkpoint(path)
        x = np.array([0.3, 0.8])
        npt.assert_allclose(m2.inner_feature(1, 1, x), 0.3, atol=1e-15)

    def test_format_guard(self, tmp_path):
        path = os.path.join(tmp_path, "bad.esn")
        with open(path, "w") as fh:
            fh.write('{"format": "other-format"}')
        with pytest.raises(InvalidHyperparameterError):
            load_checkpoint(path)
