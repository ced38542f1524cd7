import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from indefrf.data import synthetic_blobs
from indefrf.bench import relative_frobenius_error
from indefrf.errors import DimensionMismatch, EmptyPlus
from indefrf.features import (
    FeatureMapModel,
    MappedFeatures,
    approx_gram,
    approx_kernel,
    build_feature_map,
    estimator_mse,
    map_points,
)
from indefrf.kernels import KernelSpec, gram_matrix
from indefrf.measures import DecomposedMeasure, zero_measure
from indefrf.sampling import MC, OMC, FrequencySample, RngStream
from indefrf.spectra import decompose_kernel
from oracles import unit_vectors

D = 5
DG = KernelSpec.delta_gaussian(1, 10, D)


@pytest.fixture(scope="module")
def dg_model():
    return build_feature_map(decompose_kernel(DG), 16, MC, RngStream(0))


class TestBuild:
    def test_gaussian_pd(self):
        m = build_feature_map(decompose_kernel(KernelSpec.gaussian(1.0, 3)), 8, MC, RngStream(0))
        assert m.nu is None and m.scale_plus == 1.0 and m.scale_minus == 0.0
        assert m.feature_dim == 32

    def test_delta_gaussian_laws(self):
        m = build_feature_map(decompose_kernel(KernelSpec.delta_gaussian(1, 10, 8)), 4000, MC,
                              RngStream(1))
        assert m.scale_plus == m.scale_minus == 1.0
        assert np.std(m.omega.vectors) == pytest.approx(1.0, rel=0.03)
        assert np.std(m.nu.vectors) == pytest.approx(0.1, rel=0.03)

    def test_sph_poly_scales(self):
        with pytest.warns(RuntimeWarning):
            dec = decompose_kernel(KernelSpec.spherical_polynomial(2, 2, 16))
        m = build_feature_map(dec, 8, MC, RngStream(0))
        assert m.scale_plus + m.scale_minus == pytest.approx(dec.total_mass)
        assert m.scale_plus - m.scale_minus == pytest.approx(1.0, abs=1e-2)

    def test_empty(self):
        dec = DecomposedMeasure(zero_measure(2), zero_measure(2), 0.0, 0.0)
        with pytest.raises(EmptyPlus):
            build_feature_map(dec, 4)

    def test_invariant(self):
        om = FrequencySample(np.zeros((2, 2)), np.ones(2), MC)
        with pytest.raises(ValueError):
            FeatureMapModel(om, None, 1.0, 0.5)


class TestMap:
    def test_origin_row(self, dg_model):
        f = map_points(dg_model, np.zeros((1, D)))
        expected = np.tile([1.0, 0.0], 16) * math.sqrt(1.0 / 16)
        np.testing.assert_allclose(f.plus_block[0], expected, atol=1e-15)

    def test_self_product_is_zero(self, dg_model):
        x = unit_vectors(4, D, 0)
        f = map_points(dg_model, x)
        np.testing.assert_allclose(np.diag(f.gram()), 0.0, atol=1e-12)

    def test_shape(self, dg_model):
        f = map_points(dg_model, unit_vectors(10, D, 1))
        assert f.concatenated().shape == (10, 4 * 16)

    def test_empty_dataset(self, dg_model):
        f = map_points(dg_model, np.zeros((0, D)))
        assert f.plus_block.shape == (0, 32)

    def test_dimension_mismatch(self, dg_model):
        with pytest.raises(DimensionMismatch):
            map_points(dg_model, np.zeros((2, D + 1)))

    def test_bytes_roundtrip(self, dg_model):
        f = map_points(dg_model, unit_vectors(3, D, 2))
        back = MappedFeatures.from_bytes(f.to_bytes())
        np.testing.assert_array_equal(back.plus_block, f.plus_block)
        np.testing.assert_array_equal(back.minus_block, f.minus_block)


class TestApproxKernel:
    def test_diagonal(self, dg_model):
        x = unit_vectors(1, D, 3)[0]
        assert approx_kernel(dg_model, x, x) == pytest.approx(0.0, abs=1e-12)

    def test_zero_model(self):
        om = FrequencySample(np.ones((3, 2)), np.ones(3), MC)
        assert approx_kernel(FeatureMapModel(om, None, 0.0, 0.0), [0, 1], [1, 0]) == 0.0

    @settings(max_examples=40, deadline=None)
    @given(arrays(float, (3, D), elements=st.floats(-3, 3)))
    def test_routes_and_shift(self, pts):
        m = build_feature_map(decompose_kernel(DG), 8, OMC, RngStream(7))
        x, y, c = pts
        inner = approx_kernel(m, x, y, "inner")
        cosine = approx_kernel(m, x, y, "cosine")
        assert inner == pytest.approx(cosine, abs=1e-10)
        assert approx_kernel(m, x + c, y + c, "inner") == pytest.approx(inner, abs=1e-10)

    def test_large_s_mean(self):
        kern = KernelSpec.delta_gaussian(1, 10, 3)
        dec = decompose_kernel(kern)
        x, y = np.zeros(3), np.array([1.0, 0.0, 0.0])
        vals = [approx_kernel(build_feature_map(dec, 4096, MC, RngStream(s)), x, y, "cosine")
                for s in range(100)]
        exact = math.exp(-0.5) - math.exp(-0.005)
        assert exact == pytest.approx(-0.388482, abs=1e-6)
        assert abs(np.mean(vals) - exact) < 3 * np.std(vals, ddof=1) / 10


class TestGram:
    def test_single_point(self, dg_model):
        np.testing.assert_allclose(approx_gram(dg_model, unit_vectors(1, D, 0)), [[0.0]], atol=1e-12)

    def test_entrywise(self, dg_model):
        x = unit_vectors(6, D, 4)
        G = approx_gram(dg_model, x)
        ref = np.array([[approx_kernel(dg_model, a, b, "cosine") for b in x] for a in x])
        np.testing.assert_allclose(G, ref, atol=1e-10)

    def test_error_decay(self):
        d = 16
        data = synthetic_blobs(300, d, rng=0)
        kern = KernelSpec.delta_gaussian(1, 10, d)
        dec = decompose_kernel(kern)
        exact = gram_matrix(kern, data)
        wins = 0
        for seed in range(10):
            errs = [relative_frobenius_error(exact, approx_gram(build_feature_map(
                dec, s, MC, RngStream(seed)), data)) for s in (2 * d, 32 * d)]
            wins += errs[1] < errs[0]
        assert wins >= 9


class TestEstimatorMse:
    def test_pd_unbiased(self):
        kern = KernelSpec.gaussian(1.0, 4)
        dec = decompose_kernel(kern)
        x = unit_vectors(10, 4, 0)
        pairs = list(zip(x[:5], x[5:]))
        stats = estimator_mse(kern, lambda r: build_feature_map(dec, 2048, MC, r), pairs, 50,
                              RngStream(1))
        assert np.all(stats.within(3.0))

    def test_delta_gaussian_unbiased(self):
        d = 16
        kern = KernelSpec.delta_gaussian(1, 10, d)
        dec = decompose_kernel(kern)
        x = unit_vectors(100, d, 5)
        pairs = list(zip(x[:50], x[50:]))
        stats = estimator_mse(kern, lambda r: build_feature_map(dec, 64, MC, r), pairs, 200,
                              RngStream(2))
        assert np.all(stats.within(3.0))

    def test_omc_reduces_mse(self):
        d = 32
        kern = KernelSpec.gaussian(1.0, d)
        dec = decompose_kernel(kern)
        g = np.random.default_rng(0)
        x = g.standard_normal((1000, d)) / math.sqrt(d)
        pairs = list(zip(x[:500], x[500:]))
        res = {s: estimator_mse(kern, lambda r, s=s: build_feature_map(dec, d, s, r), pairs, 100,
                                RngStream(3)).aggregate_mse for s in (MC, OMC)}
        assert res[OMC] <= 1.05 * res[MC]

    def test_needs_trials(self):
        with pytest.raises(ValueError):
            estimator_mse(DG, None, [(np.zeros(D), np.zeros(D))], 1, RngStream(0))
