import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from msgwr.diagnostics import fit_metrics, knn_weights, morans_i
from msgwr.errors import NumericError, ParameterError
from msgwr.model_selection import aicc, cv_score
from msgwr.simulation import unit_grid


def grid(side):
    u, v = np.meshgrid(np.arange(side, dtype=float), np.arange(side, dtype=float))
    return np.column_stack([u.ravel(), v.ravel()])


class TestFitMetrics:

    def test_perfect_fit(self, rng):
        y = rng.normal(size=20)
        metrics = fit_metrics(y, y, 3.0)
        assert metrics.r2 == 1.0
        assert metrics.adj_r2 == 1.0
        assert metrics.rss == 0.0
        assert metrics.mae == 0.0
        assert metrics.rmse == 0.0
        assert math.isnan(metrics.aicc)

    def test_null_model(self, rng):
        y = rng.normal(size=30)
        metrics = fit_metrics(y, np.full(30, y.mean()), 1.0)
        assert metrics.r2 == pytest.approx(0.0, abs=1e-12)
        assert metrics.adj_r2 == pytest.approx(1.0 - 29 / 28, abs=1e-12)

    def test_matches_ols_oracle(self, rng):
        n = 50
        X = np.column_stack([np.ones(n), rng.normal(size=(n, 2))])
        y = X @ np.array([1.0, 2.0, -1.0]) + rng.normal(size=n)
        H = X @ np.linalg.solve(X.T @ X, X.T)
        fitted = H @ y
        e = y - fitted
        metrics = fit_metrics(y, fitted, 3.0, leverage=np.diagonal(H))
        tss = np.sum((y - y.mean()) ** 2)
        assert metrics.rss == pytest.approx(e @ e, rel=1e-12)
        assert metrics.r2 == pytest.approx(1 - (e @ e) / tss, rel=1e-12)
        assert metrics.adj_r2 == pytest.approx(1 - (1 - metrics.r2) * (n - 1) / (n - 4), rel=1e-12)
        assert metrics.aicc == pytest.approx(aicc(n, (e @ e) / n, 3.0), rel=1e-12)
        assert metrics.cv == pytest.approx(cv_score(e, np.diagonal(H)), rel=1e-12)
        assert metrics.mae <= metrics.rmse

    def test_cv_absent_without_leverage(self, rng):
        y = rng.normal(size=10)
        assert math.isnan(fit_metrics(y, y + 0.1, 2.0).cv)

    def test_too_many_parameters(self, rng):
        with pytest.raises(ParameterError):
            fit_metrics(rng.normal(size=5), rng.normal(size=5), 4.0)

    def test_constant_response(self):
        with pytest.raises(NumericError):
            fit_metrics(np.ones(10), np.ones(10), 1.0)

    def test_to_dict(self, rng):
        y = rng.normal(size=10)
        d = fit_metrics(y, y + 0.1, 2.0).to_dict()
        assert set(d) == {'adj_r2', 'aicc', 'rss', 'mae', 'rmse', 'r2', 'cv'}


class TestKnnWeights:

    def test_row_standardized(self, rng):
        W, _ = knn_weights(rng.uniform(size=(20, 2)), 5).full()
        assert_allclose(W.sum(axis=1), 1.0, atol=1e-15)
        assert np.all(np.diagonal(W) == 0)
        assert np.all((W > 0).sum(axis=1) == 5)

    def test_k_range(self, rng):
        with pytest.raises(ParameterError):
            knn_weights(rng.uniform(size=(5, 2)), 5)


class TestMoransI:

    def test_expected_value(self, rng):
        result = morans_i(rng.normal(size=616), rng.uniform(size=(616, 2)))
        assert result.expected == pytest.approx(-1 / 615, abs=1e-15)
        assert result.k == 8

    def test_checkerboard_is_negative(self):
        coords = grid(6)
        z = np.where((coords[:, 0] + coords[:, 1]) % 2 == 0, 1.0, -1.0)
        result = morans_i(z, coords, k=4)
        assert result.I == pytest.approx(-24 / 36, abs=1e-12)
        assert result.z < 0

    def test_gradient_is_positive(self):
        coords = grid(10)
        result = morans_i(coords[:, 0] + coords[:, 1], coords)
        assert result.I > 0.5
        assert result.p_value < 1e-6

    def test_affine_invariance(self, rng):
        coords = unit_grid(8)
        e = rng.normal(size=64)
        a = morans_i(e, coords)
        b = morans_i(3.0 * e - 11.0, coords)
        assert b.I == pytest.approx(a.I, abs=1e-12)
        assert b.z == pytest.approx(a.z, abs=1e-10)

    def test_variance_positive(self, rng):
        assert morans_i(rng.normal(size=40), rng.uniform(size=(40, 2))).variance > 0

    def test_permutations_are_seeded(self):
        coords = grid(8)
        e = coords[:, 0] - 0.5 * coords[:, 1]
        a = morans_i(e, coords, permutations=99, seed=7)
        b = morans_i(e, coords, permutations=99, seed=7)
        assert a.p_permutation == b.p_permutation
        assert a.p_permutation == pytest.approx(0.01)
        assert a.permutations == 99

    def test_no_permutations_by_default(self, rng):
        assert morans_i(rng.normal(size=20), rng.uniform(size=(20, 2))).p_permutation is None

    def test_too_few_observations(self):
        with pytest.raises(ParameterError):
            morans_i(np.array([1.0, 2.0]), np.array([[0.0, 0.0], [1.0, 1.0]]))

    def test_constant_residuals(self):
        with pytest.raises(NumericError):
            morans_i(np.ones(16), grid(4), k=3)

    def test_length_mismatch(self, rng):
        with pytest.raises(ParameterError):
            morans_i(rng.normal(size=10), rng.uniform(size=(12, 2)))

    def test_seed_leaves_global_stream_alone(self):
        coords = grid(6)
        np.random.seed(3)
        expected = np.random.uniform()
        np.random.seed(3)
        morans_i(coords[:, 0], coords, permutations=19, seed=11)
        assert np.random.uniform() == expected
