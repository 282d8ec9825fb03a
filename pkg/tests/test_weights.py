import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from msgwr.errors import CalibrationError, ParameterError
from msgwr.geometry import NeighborIndex
from msgwr.weights import (RHO, attribute_weight_matrix, attribute_weights, combine_weights, geographic_weight_matrix,
                           geographic_weights, pooled_attribute_weight_matrix, weight_triple)

# neighborhood with mean 0 and population variance exactly 1
UNIT_SD_VALUES = np.array([1.0, 1.0, -1.0, -1.0] + [0.0] * 16 + [3.0, -3.0])


class TestGeographicWeights:

    def test_point_values(self):
        w = geographic_weights(np.array([0.0, 2.0, 1.0, 3.0]), 2.0)
        assert w[0] == 1.0
        assert w[1] == 0.0
        assert w[2] == 0.5625
        assert w[3] == 0.0

    @pytest.mark.parametrize('radius', [0.0, -1.0])
    def test_nonpositive_radius(self, radius):
        with pytest.raises(ParameterError):
            geographic_weights(np.array([0.0, 1.0]), radius)

    def test_matrix_rows_match_kernel(self, rng):
        index = NeighborIndex(rng.uniform(size=(15, 2)))
        W = geographic_weight_matrix(index, 6)
        radii = index.radii(6)
        for i in range(15):
            assert_allclose(W[i], geographic_weights(index.distances[i], radii[i]), rtol=0, atol=1e-15)
        assert_array_equal(np.diagonal(W), 1.0)
        assert_array_equal((W > 0).sum(axis=1), 6)


class TestAttributeWeights:

    def test_identical_value_is_one(self):
        x = np.array([2.0, 2.0, 5.0])
        w = attribute_weights(x, 0, np.ones(3, dtype=bool))
        assert w[1] == 1.0

    def test_difference_of_one_sd_is_half(self):
        w = attribute_weights(UNIT_SD_VALUES, 0, np.ones(len(UNIT_SD_VALUES), dtype=bool))
        assert w[4] == 0.5
        assert w[1] == 1.0

    def test_difference_of_two_sd(self):
        w = attribute_weights(UNIT_SD_VALUES, 0, np.ones(len(UNIT_SD_VALUES), dtype=bool))
        assert w[2] == 0.0625
        assert w[20] == 0.0625

    def test_zero_outside_neighborhood(self, rng):
        x = rng.normal(size=10)
        mask = np.zeros(10, dtype=bool)
        mask[[0, 3, 4, 7]] = True
        w = attribute_weights(x, 3, mask)
        assert_array_equal(w[~mask], 0.0)
        assert w[3] == 1.0

    def test_constant_covariate_uses_rho(self):
        w = attribute_weights(np.ones(6), 2, np.ones(6, dtype=bool), rho=RHO)
        assert_array_equal(w, 1.0)

    def test_empty_neighborhood(self):
        with pytest.raises(CalibrationError):
            attribute_weights(np.arange(4.0), 0, np.zeros(4, dtype=bool))

    def test_translation_and_scale_invariance(self, rng):
        x = rng.normal(size=30)
        mask = rng.uniform(size=30) < 0.6
        mask[5] = True
        w = attribute_weights(x, 5, mask)
        assert_allclose(attribute_weights(x + 17.0, 5, mask), w, atol=1e-12)
        assert_allclose(attribute_weights(3.5 * x, 5, mask), w, atol=1e-12)

    def test_sample_sd_option(self):
        x = np.array([0.0, 1.0])
        population = attribute_weights(x, 0, np.ones(2, dtype=bool), ddof=0)
        sample = attribute_weights(x, 0, np.ones(2, dtype=bool), ddof=1)
        assert population[1] == 0.5 ** 4
        assert sample[1] == pytest.approx(0.5 ** 2)

    def test_matrix_rows_match_per_point(self, rng):
        index = NeighborIndex(rng.uniform(size=(20, 2)))
        G = geographic_weight_matrix(index, 8)
        x = rng.normal(size=20)
        A = attribute_weight_matrix(x, G)
        for i in range(20):
            assert_allclose(A[i], attribute_weights(x, i, G[i] > 0), atol=1e-14)


class TestPooledAttributeWeights:

    def test_self_similarity_is_one(self, rng):
        index = NeighborIndex(rng.uniform(size=(20, 2)))
        G = geographic_weight_matrix(index, 7)
        P = pooled_attribute_weight_matrix(rng.normal(size=(20, 3)), G)
        assert_array_equal(np.diagonal(P), 1.0)
        assert_array_equal(P[G == 0], 0.0)

    def test_single_covariate_matches_attribute_matrix(self, rng):
        index = NeighborIndex(rng.uniform(size=(20, 2)))
        G = geographic_weight_matrix(index, 9)
        x = rng.normal(size=20)
        assert_allclose(pooled_attribute_weight_matrix(x[:, None], G), attribute_weight_matrix(x, G), atol=1e-14)

    def test_no_covariates_is_support_indicator(self, rng):
        index = NeighborIndex(rng.uniform(size=(10, 2)))
        G = geographic_weight_matrix(index, 4)
        assert_array_equal(pooled_attribute_weight_matrix(np.empty((10, 0)), G), (G > 0).astype(float))


class TestCombineWeights:

    def test_endpoints(self, rng):
        g, a = rng.uniform(size=8), rng.uniform(size=8)
        assert_array_equal(combine_weights(g, a, 1.0), g)
        assert_array_equal(combine_weights(g, a, 0.0), a)

    def test_mixture_arithmetic(self):
        w = combine_weights(np.array([0.8]), np.array([0.2]), 0.371)
        assert w[0] == pytest.approx(0.4226, abs=1e-12)

    @pytest.mark.parametrize('alpha', [-0.1, 1.5])
    def test_alpha_out_of_range(self, alpha):
        with pytest.raises(ParameterError):
            combine_weights(np.ones(3), np.ones(3), alpha)

    def test_length_mismatch(self):
        with pytest.raises(ParameterError):
            combine_weights(np.ones(3), np.ones(4), 0.5)

    @pytest.mark.parametrize('alpha', [0.0, 0.25, 0.5, 0.75, 1.0])
    def test_linear_in_alpha(self, rng, alpha):
        g, a = rng.uniform(size=10), rng.uniform(size=10)
        w0, w1 = combine_weights(g, a, 0.0), combine_weights(g, a, 1.0)
        assert_allclose(combine_weights(g, a, alpha), w0 + alpha * (w1 - w0), atol=1e-15)


class TestWeightTriple:

    def test_support_and_range(self, rng):
        coords = rng.uniform(size=(25, 2))
        index = NeighborIndex(coords)
        x = rng.normal(size=25)
        triple = weight_triple(index.distances[3], index.radii(10)[3], x, 3, 0.4, covariate_index=2)
        assert triple.point_index == 3
        assert triple.covariate_index == 2
        assert_array_equal(triple.w_combined > 0, triple.w_geo > 0)
        assert_array_equal(triple.w_attr[triple.w_geo == 0], 0.0)
        for w in (triple.w_geo, triple.w_attr, triple.w_combined):
            assert np.all((w >= 0) & (w <= 1))
        assert triple.w_geo[3] == 1.0
