"""Model components: dimension split, attention identities, fusion power
constraint, degenerate-alpha exclusion, and parameter-store contracts."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dbcsem import models
from dbcsem.models import (ConfigError, DEFAULT_ALPHA_GRID, ParamStore, SystemConfig,
                           build_point_to_point, build_proposed, dimension_split)
from dbcsem.tensor import Tensor

TOY = SystemConfig(height=4, width=4, k=6, l=12, enc_hidden=[16], dec_hidden=[16],
                   ma_hidden=[8], attn_hidden=[8], df_hidden=[16])


def _images(rng, cfg, n=5):
    return Tensor(rng.uniform(0.0, 1.0, size=(n, cfg.source_dim)))


class TestSystemConfig:
    def test_derived_quantities(self):
        cfg = SystemConfig()
        assert cfg.source_dim == 8 * 8 * 3
        assert cfg.bandwidth_ratio == pytest.approx(48 / 192)

    def test_requires_l_twice_k(self):
        with pytest.raises(ConfigError):
            SystemConfig(k=10, l=24)

    def test_dict_round_trip(self):
        cfg = SystemConfig(height=4, width=4, k=6, l=12, tie_reencoder=True)
        assert SystemConfig.from_dict(cfg.to_dict()) == cfg

    def test_default_alpha_grid(self):
        assert DEFAULT_ALPHA_GRID == tuple(round(0.1 * i, 1) for i in range(11))


class TestDimensionSplit:
    @pytest.mark.parametrize("l", [10, 96, 1536])
    def test_grid_values_floor_ceil(self, l):
        # oracle in exact arithmetic: the grid values are the decimals i/10,
        # so floor/ceil must not be tripped by float representation noise
        for i, alpha in enumerate(DEFAULT_ALPHA_GRID):
            l1, l2 = dimension_split(alpha, l)
            assert l1 == math.floor(Fraction(i, 10) * l)
            assert l2 == math.ceil((1 - Fraction(i, 10)) * l)
            assert l1 + l2 == l

    def test_endpoints(self):
        assert dimension_split(0.0, 96) == (0, 96)
        assert dimension_split(1.0, 96) == (96, 0)

    def test_snap_resists_float_noise(self):
        # 0.3 * 96 = 28.799999...; the split must behave as exact 0.3
        assert dimension_split(0.1 + 0.2, 96) == dimension_split(0.3, 96)

    @settings(max_examples=80, deadline=None)
    @given(st.floats(0.0, 1.0), st.integers(2, 2000))
    def test_always_partitions(self, alpha, l):
        l1, l2 = dimension_split(alpha, l)
        assert l1 >= 0 and l2 >= 0 and l1 + l2 == l


class TestParamStore:
    def test_glorot_shapes_and_zero_bias(self):
        store = ParamStore(TOY)
        store.add_mlp("m", [4, 7, 3], out_act=None, rng=np.random.default_rng(0))
        assert store.tensors["m.w0"].shape == (4, 7)
        assert store.tensors["m.b0"].shape == (1, 7)
        np.testing.assert_array_equal(store.tensors["m.b0"].data, 0.0)
        limit = math.sqrt(6.0 / (4 + 7))
        assert np.all(np.abs(store.tensors["m.w0"].data) <= limit)

    def test_tied_reencoder_shares_weights(self):
        cfg = SystemConfig(height=4, width=4, k=6, l=12, tie_reencoder=True)
        store = build_proposed(cfg, seed=0)
        assert store.aliases.get("reenc") == "enc1"
        rng = np.random.default_rng(0)
        x = _images(rng, cfg, 3)
        a = models.semantic_encode(store, "reenc", x)
        b = models.semantic_encode(store, "enc1", x)
        np.testing.assert_array_equal(a.data, b.data)

    def test_state_dict_round_trip(self):
        a = build_proposed(TOY, seed=1)
        b = build_proposed(TOY, seed=2)
        b.load_state(a.state_dict())
        for name, t in a.tensors.items():
            np.testing.assert_array_equal(b.tensors[name].data, t.data)

    def test_load_state_rejects_missing_and_extra(self):
        store = build_proposed(TOY, seed=0)
        state = store.state_dict()
        bad = dict(state)
        bad.pop(next(iter(bad)))
        with pytest.raises(ConfigError):
            store.load_state(bad)
        bad = dict(state)
        bad["ghost.w0"] = np.zeros((2, 2))
        with pytest.raises(ConfigError):
            store.load_state(bad)

    def test_load_state_rejects_shape_mismatch(self):
        store = build_proposed(TOY, seed=0)
        state = store.state_dict()
        name = next(iter(state))
        state[name] = np.zeros((1, 1))
        with pytest.raises(ConfigError):
            store.load_state(state)

    def test_build_is_seed_deterministic(self):
        a = build_proposed(TOY, seed=3).state_dict()
        b = build_proposed(TOY, seed=3).state_dict()
        for name in a:
            np.testing.assert_array_equal(a[name], b[name])


class TestAttentionAndFusion:
    def setup_method(self):
        self.store = build_proposed(TOY, seed=0)
        rng = np.random.default_rng(9)
        self.s1 = _images(rng, TOY)
        self.s2 = _images(rng, TOY)

    def test_mutual_attention_weights_are_complementary(self):
        x1e = models.semantic_encode(self.store, "enc1", self.s1)
        x2e = models.semantic_encode(self.store, "enc2", self.s2)
        x1ma, x2ma, w = models.mutual_attention(self.store, x1e, x2e)
        assert np.all((w.data > 0.0) & (w.data < 1.0))
        np.testing.assert_allclose(x1ma.data, w.data * x1e.data, atol=1e-12)
        np.testing.assert_allclose(x2ma.data, (1.0 - w.data) * x2e.data, atol=1e-12)

    @pytest.mark.parametrize("alpha", [0.0, 0.3, 0.5, 1.0])
    def test_transmit_unit_power_per_sample(self, alpha):
        y = models.transmit(self.store, self.s1, self.s2, -5.0, 0.0, alpha)
        assert y.data.shape == (5, TOY.k)
        np.testing.assert_allclose(np.mean(y.data**2, axis=1), 1.0, atol=1e-9)

    def test_fisf_rejects_nondegraded_order(self):
        x1e = models.semantic_encode(self.store, "enc1", self.s1)
        x2e = models.semantic_encode(self.store, "enc2", self.s2)
        with pytest.raises(ConfigError):
            models.fisf_fuse(self.store, x1e, x2e, 5.0, 0.0, 0.5)

    def test_alpha_zero_ignores_s1(self):
        rng = np.random.default_rng(1)
        other = _images(rng, TOY)
        a = models.transmit(self.store, self.s1, self.s2, -5.0, 0.0, 0.0)
        b = models.transmit(self.store, other, self.s2, -5.0, 0.0, 0.0)
        np.testing.assert_array_equal(a.data, b.data)

    def test_alpha_one_ignores_s2(self):
        rng = np.random.default_rng(2)
        other = _images(rng, TOY)
        a = models.transmit(self.store, self.s1, self.s2, -5.0, 0.0, 1.0)
        b = models.transmit(self.store, self.s1, other, -5.0, 0.0, 1.0)
        np.testing.assert_array_equal(a.data, b.data)

    def test_interior_alpha_uses_both_sources(self):
        rng = np.random.default_rng(3)
        other = _images(rng, TOY)
        base = models.transmit(self.store, self.s1, self.s2, -5.0, 0.0, 0.5)
        assert not np.array_equal(
            base.data, models.transmit(self.store, other, self.s2, -5.0, 0.0, 0.5).data)
        assert not np.array_equal(
            base.data, models.transmit(self.store, self.s1, other, -5.0, 0.0, 0.5).data)


class TestReceivers:
    def setup_method(self):
        self.store = build_proposed(TOY, seed=0)
        rng = np.random.default_rng(4)
        self.s1 = _images(rng, TOY)
        self.s2 = _images(rng, TOY)

    def test_decoded_images_in_unit_range(self):
        y = models.transmit(self.store, self.s1, self.s2, -5.0, 0.0, 0.4)
        z1 = models.worse_user_pipeline(self.store, y, -5.0, 0.4)
        z1_tilde, z2 = models.better_user_pipeline(self.store, y, 0.0, 0.4)
        for z in (z1, z1_tilde, z2):
            assert z.data.shape == (5, TOY.source_dim)
            assert np.all((z.data >= 0.0) & (z.data <= 1.0))

    def test_defuse_extra_feature_contract(self):
        y = Tensor(np.zeros((5, TOY.k)))
        feat = Tensor(np.zeros((5, TOY.l)))
        with pytest.raises(ConfigError):
            models.defuse(self.store, "df_worse", y, -5.0, 0.4, extra=feat)
        with pytest.raises(ConfigError):
            models.defuse(self.store, "df_better2", y, 0.0, 0.4)

    def test_point_to_point_round_trip_shapes(self):
        store = build_point_to_point(TOY, seed=0)
        y = models.point_to_point_transmit(store, self.s1, 5.0)
        assert y.data.shape == (5, TOY.k)
        np.testing.assert_allclose(np.mean(y.data**2, axis=1), 1.0, atol=1e-9)
        z = models.point_to_point_receive(store, y, 5.0)
        assert z.data.shape == (5, TOY.source_dim)

    def test_cifar_scale_dimensions(self):
        cfg = SystemConfig(height=32, width=32, k=768, l=1536)
        assert cfg.source_dim == 3072
        assert dimension_split(0.5, cfg.l) == (768, 768)
