import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from numpy.testing import assert_allclose

from msgwr.enum import Criterion
from msgwr.errors import CalibrationError, InfeasibleCandidateError, NumericError, ParameterError
from msgwr.model_selection import (CriterionValue, SearchTrace, aicc, alpha_search_dnc, alpha_search_greedy,
                                   alpha_searcher, cv_score, evaluate_criterion, golden_section_bandwidth_search)


class TestAICc:

    def test_reference_value(self):
        expected = 100 * math.log(2 * math.pi) + 100 * 105 / 93
        assert aicc(100, 1.0, 5.0) == pytest.approx(296.690932, abs=1e-6)
        assert aicc(100, 1.0, 5.0) == pytest.approx(expected, abs=1e-12)

    def test_zero_complexity(self):
        assert aicc(100, 1.0, 0.0) == pytest.approx(100 * math.log(2 * math.pi) + 100 * 100 / 98, abs=1e-10)

    def test_increasing_in_trace(self):
        values = [aicc(100, 2.0, t) for t in np.linspace(0, 90, 50)]
        assert all(a < b for a, b in zip(values, values[1:]))

    def test_infeasible_denominator(self):
        with pytest.raises(InfeasibleCandidateError):
            aicc(10, 1.0, 8.0)

    def test_nonpositive_variance(self):
        with pytest.raises(NumericError):
            aicc(10, 0.0, 2.0)


class TestCVScore:

    def test_zero_leverage_is_mse(self, rng):
        e = rng.normal(size=20)
        assert cv_score(e, np.zeros(20)) == pytest.approx(np.mean(e ** 2), abs=1e-15)

    def test_perfect_fit(self):
        assert cv_score(np.zeros(5), np.full(5, 0.3)) == 0.0

    def test_leverage_of_one(self):
        with pytest.raises(InfeasibleCandidateError):
            cv_score(np.ones(3), np.array([0.2, 1.0, 0.1]))

    def test_press_identity(self, rng):
        for _ in range(20):
            n, m = int(rng.integers(8, 31)), int(rng.integers(1, 4))
            X = np.column_stack([np.ones(n), rng.normal(size=(n, m))])
            y = rng.normal(size=n)
            H = X @ np.linalg.solve(X.T @ X, X.T)
            e = y - H @ y
            loo = []
            for i in range(n):
                keep = np.arange(n) != i
                b = np.linalg.lstsq(X[keep], y[keep], rcond=None)[0]
                loo.append((y[i] - X[i] @ b) ** 2)
            assert cv_score(e, np.diagonal(H)) == pytest.approx(np.mean(loo), abs=1e-10)


class TestEvaluateCriterion:

    def test_aicc(self, rng):
        e, lev = rng.normal(size=50), np.full(50, 0.1)
        value = evaluate_criterion('aicc', e, lev)
        assert value.feasible
        assert value.kind is Criterion.AICC
        assert value.trace_S == pytest.approx(5.0)
        assert value.sigma2_hat == pytest.approx(e @ e / 50)
        assert value.value == pytest.approx(aicc(50, e @ e / 50, 5.0))

    def test_infeasible_is_flagged(self, rng):
        value = evaluate_criterion(Criterion.AICC, rng.normal(size=10), np.full(10, 0.9))
        assert not value.feasible
        assert math.isnan(value.value)
        assert value.score == math.inf

    def test_cv(self, rng):
        e, lev = rng.normal(size=10), np.full(10, 0.5)
        assert evaluate_criterion('cv', e, lev).value == pytest.approx(cv_score(e, lev))

    def test_unknown_kind(self):
        with pytest.raises(ParameterError):
            evaluate_criterion('bic', np.ones(3), np.zeros(3))


class TestGoldenSection:

    def test_convex_synthetic(self):
        k, value = golden_section_bandwidth_search(lambda k: (k - 60) ** 2, 10, 200)
        assert k == 60
        assert value == 0

    def test_constant_prefers_largest(self):
        k, _ = golden_section_bandwidth_search(lambda k: 1.0, 10, 200)
        assert k == 200

    def test_narrow_bracket_is_exhaustive(self):
        seen = []

        def evaluate(k):
            seen.append(k)
            return -k if k != 11 else -100

        k, _ = golden_section_bandwidth_search(evaluate, 10, 12)
        assert k == 11
        assert sorted(seen) == [10, 11, 12]

    def test_random_unimodal_instances(self, rng):
        for _ in range(50):
            k_min = int(rng.integers(2, 40))
            k_max = int(rng.integers(k_min, 201))
            center = rng.uniform(k_min, k_max)
            a, b = rng.uniform(0.01, 3.0), rng.uniform(0.0, 0.5)

            def f(k):
                return a * abs(k - center) + b * (k - center) ** 2

            exhaustive = min(range(k_min, k_max + 1), key=lambda k: (f(k), -k))
            assert golden_section_bandwidth_search(f, k_min, k_max)[0] == exhaustive

    def test_infeasible_region_is_skipped(self):
        def evaluate(k):
            if k < 30:
                return CriterionValue.infeasible(Criterion.AICC)
            return CriterionValue(Criterion.AICC, (k - 50) ** 2, 1.0)

        k, value = golden_section_bandwidth_search(evaluate, 5, 120)
        assert k == 50
        assert value.feasible

    def test_all_infeasible(self):
        with pytest.raises(CalibrationError):
            golden_section_bandwidth_search(lambda k: CriterionValue.infeasible(Criterion.AICC), 5, 50)

    def test_invalid_range(self):
        with pytest.raises(ParameterError):
            golden_section_bandwidth_search(lambda k: k, 20, 10)


class TestAlphaSearchDnC:

    def test_interior_minimum(self):
        alpha, _ = alpha_search_dnc(lambda a: (a - 0.371) ** 2, epsilon=0.005)
        assert abs(alpha - 0.371) <= 0.005

    def test_minimum_at_one(self):
        alpha, _ = alpha_search_dnc(lambda a: (a - 1.3) ** 2)
        assert alpha == 1.0

    def test_minimum_at_zero(self):
        alpha, _ = alpha_search_dnc(lambda a: a)
        assert alpha == 0.0

    def test_ties_prefer_larger_alpha(self):
        assert alpha_search_dnc(lambda a: 2.0)[0] == 1.0

    def test_random_unimodal_within_epsilon(self, rng):
        for center in rng.uniform(0, 1, size=20):
            alpha, _ = alpha_search_dnc(lambda a: abs(a - center) ** 1.5, epsilon=0.005)
            assert abs(alpha - center) <= 0.005

    def test_endpoints_always_evaluated(self):
        seen = set()

        def evaluate(a):
            seen.add(a)
            return (a - 0.5) ** 2

        alpha_search_dnc(evaluate)
        assert {0.0, 1.0} <= seen

    def test_infeasible_everywhere(self):
        with pytest.raises(InfeasibleCandidateError):
            alpha_search_dnc(lambda a: CriterionValue.infeasible(Criterion.CV))

    def test_invalid_epsilon(self):
        with pytest.raises(ParameterError):
            alpha_search_dnc(lambda a: a, epsilon=0.0)


class TestAlphaSearchGreedy:

    def test_unimodal_from_seeds(self):
        alpha, _ = alpha_search_greedy(lambda a: (a - 0.25) ** 2, seeds=(0.0, 0.5, 1.0), step=0.05, refine_step=None)
        assert abs(alpha - 0.25) <= 0.05

    def test_minimum_at_seed(self):
        alpha, _ = alpha_search_greedy(lambda a: abs(a - 0.5), seeds=(0.0, 0.5, 1.0), step=0.05, refine_step=None)
        assert alpha == 0.5

    def test_bimodal_finds_better_basin(self):
        def f(a):
            return min((a - 0.1) ** 2 + 0.01, (a - 0.9) ** 2)

        alpha, value = alpha_search_greedy(f)
        assert abs(alpha - 0.9) <= 0.01
        assert value == pytest.approx(f(alpha))

    def test_refinement_sharpens(self):
        coarse, _ = alpha_search_greedy(lambda a: (a - 0.432) ** 2, refine_step=None)
        fine, _ = alpha_search_greedy(lambda a: (a - 0.432) ** 2, refine_step=0.01)
        assert abs(fine - 0.432) <= abs(coarse - 0.432)
        assert abs(fine - 0.432) <= 0.005

    def test_always_evaluates_one(self):
        seen = set()

        def evaluate(a):
            seen.add(a)
            return a

        alpha_search_greedy(evaluate, seeds=(0.0,))
        assert 1.0 in seen

    def test_invalid_seed(self):
        with pytest.raises(ParameterError):
            alpha_search_greedy(lambda a: a, seeds=(1.5,))

    def test_searcher_factory(self):
        dnc = alpha_searcher('dnc', epsilon=0.01)
        greedy = alpha_searcher('greedy')
        assert abs(dnc(lambda a: (a - 0.6) ** 2)[0] - 0.6) <= 0.01
        assert abs(greedy(lambda a: (a - 0.6) ** 2)[0] - 0.6) <= 0.01


class TestSearchTrace:

    def test_frame_sorted_by_covariate_and_iteration(self):
        trace = SearchTrace()
        trace.record(1, 30, 0.5, 10.0, 2)
        trace.record(0, 20, 1.0, 12.0, 1)
        trace.record(-1, 25, 1.0, 15.0, 0)
        trace.record(0, 22, 0.9, 11.0, 1)
        df = trace.to_frame()
        assert list(df.columns) == ['covariate', 'bandwidth', 'alpha', 'criterion', 'iteration']
        assert list(df['covariate']) == [-1, 0, 0, 1]
        assert list(df['bandwidth']) == [25, 20, 22, 30]

    def test_csv_round_trip(self, tmp_path):
        trace = SearchTrace()
        trace.record(0, 20, 0.371, 123.456789012345678, 1)
        trace.record(1, 40, 1.0, float('nan'), 1)
        path = tmp_path / 'run.trace.csv'
        trace.to_csv(path)
        loaded = SearchTrace.from_csv(path)
        assert len(loaded) == 2
        a, b = trace.to_frame(), loaded.to_frame()
        assert_allclose(a['criterion'], b['criterion'], rtol=0, atol=0)
        assert list(b['bandwidth']) == [20, 40]

    def test_best_rows(self):
        trace = SearchTrace()
        trace.record(0, 20, 1.0, 5.0, 1)
        trace.record(0, 25, 0.5, 4.0, 1)
        trace.record(0, 30, 0.4, 4.0, 1)
        trace.record(1, 10, 1.0, float('nan'), 1)
        trace.record(1, 12, 0.2, 7.0, 1)
        best = trace.best()
        assert list(best['covariate']) == [0, 1]
        assert list(best['bandwidth']) == [30, 12]

    def test_concurrent_records(self):
        trace = SearchTrace()

        def work(k):
            for i in range(50):
                trace.record(k % 3, k, 1.0, float(i), 1)

        with ThreadPoolExecutor(max_workers=4) as pool:
            list(pool.map(work, range(20)))
        assert len(trace) == 1000
