"""
Fit criteria (AICc, CV) and the one-dimensional searches used during calibration:
golden-section over integer bandwidths, and divide-and-conquer or greedy
hill-climbing over alpha in [0, 1].

A search's `evaluate` callable returns either a CriterionValue or a plain
number; infeasible candidates never win and are never used in arithmetic.
"""

import math
import threading
from dataclasses import dataclass
from functools import partial

import numpy as np
import pandas as pd

from .enum import AlphaSearch, Criterion
from .errors import CalibrationError, InfeasibleCandidateError, InputError, NumericError, ParameterError
from .logging import getLogger
from .utils import read_csv
from .validation import validate_choice, validate_unit_interval

logger = getLogger(__name__)

INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
DNC_GRID_STEP = 0.1
DNC_EPSILON = 0.005
GREEDY_SEEDS = (0.0, 0.25, 0.5, 0.75, 1.0)
GREEDY_STEP = 0.05
GREEDY_REFINE_STEP = 0.01
TRACE_COLUMNS = ['covariate', 'bandwidth', 'alpha', 'criterion', 'iteration']


@dataclass(frozen=True)
class CriterionValue:
    """
    :param kind: Criterion
    :param value: criterion value, nan when infeasible
    :param trace_S: trace of the smoother
    :param sigma2_hat: RSS/n used by AICc, nan for CV
    :param feasible: False when the criterion is undefined for the candidate
    """
    kind: Criterion
    value: float
    trace_S: float
    sigma2_hat: float = float('nan')
    feasible: bool = True

    @classmethod
    def infeasible(cls, kind, trace_S=float('nan')):
        return cls(kind=kind, value=float('nan'), trace_S=float(trace_S), feasible=False)

    @property
    def score(self):
        """
        Comparison key: the value, or +inf when infeasible.
        """
        return self.value if self.feasible else math.inf


def aicc(n, sigma2_hat, trace_S):
    """
    Corrected Akaike information criterion of a linear smoother.

    :param n: (int) observations
    :param sigma2_hat: (float) residual variance estimate, > 0
    :param trace_S: (float) trace of the hat matrix
    :returns: n ln(sigma2) + n ln(2 pi) + n (n + tr S) / (n - 2 - tr S)
    """
    if not sigma2_hat > 0:
        raise NumericError(f'sigma2_hat must be positive, got {sigma2_hat}.')
    denominator = n - 2.0 - trace_S
    if not denominator > 0:
        raise InfeasibleCandidateError(f'AICc undefined: n - 2 - tr(S) = {denominator:.6g} <= 0.')
    return n * math.log(sigma2_hat) + n * math.log(2.0 * math.pi) + n * (n + trace_S) / denominator


def cv_score(residuals, leverages):
    """
    Leave-one-out cross-validation score from a single fit.

    :param residuals: (n,) residuals e_i
    :param leverages: (n,) hat diagonal s_ii, each < 1
    :returns: mean of (e_i / (1 - s_ii))**2
    """
    residuals = np.asarray(residuals, dtype=float)
    leverages = np.asarray(leverages, dtype=float)
    if (leverages >= 1.0).any():
        i = int(np.flatnonzero(leverages >= 1.0)[0])
        raise InfeasibleCandidateError(f'CV undefined: leverage {leverages[i]:.6g} >= 1 at point {i}.')
    return float(np.mean((residuals / (1.0 - leverages)) ** 2))


def evaluate_criterion(kind, residuals, leverages):
    """
    Criterion of a fitted linear smoother, infeasibility captured in the result.

    :param kind: Criterion or its value
    :returns: CriterionValue
    """
    kind = validate_choice(kind, Criterion, 'criterion')
    residuals = np.asarray(residuals, dtype=float)
    leverages = np.asarray(leverages, dtype=float)
    n = residuals.shape[0]
    trace_S = float(np.sum(leverages))
    try:
        if kind is Criterion.AICC:
            sigma2_hat = float(residuals @ residuals) / n
            return CriterionValue(kind, aicc(n, sigma2_hat, trace_S), trace_S, sigma2_hat)
        return CriterionValue(kind, cv_score(residuals, leverages), trace_S)
    except (InfeasibleCandidateError, NumericError) as e:
        logger.debug(f'Infeasible candidate: {e}')
        return CriterionValue.infeasible(kind, trace_S)


def _score(value):
    if isinstance(value, CriterionValue):
        return value.score
    value = float(value)
    return math.inf if math.isnan(value) else value


class SearchTrace:
    """
    Append-only record of (covariate, bandwidth, alpha, criterion, iteration).

    Covariate -1 marks single-scale searches over all covariates jointly.
    """

    def __init__(self, records=None):
        self._records = list(records) if records is not None else []
        self._lock = threading.Lock()

    def __len__(self):
        return len(self._records)

    def __repr__(self):
        return f'SearchTrace({len(self)} records)'

    def record(self, covariate, bandwidth, alpha, criterion, iteration):
        value = criterion.value if isinstance(criterion, CriterionValue) else float(criterion)
        with self._lock:
            self._records.append((int(covariate), int(bandwidth), float(alpha), float(value), int(iteration)))

    def to_frame(self):
        df = pd.DataFrame(self._records, columns=TRACE_COLUMNS)
        return df.sort_values(['covariate', 'iteration'], kind='mergesort').reset_index(drop=True)

    def to_csv(self, path):
        self.to_frame().to_csv(path, index=False, float_format='%.17g')

    @classmethod
    def from_frame(cls, df):
        missing = [c for c in TRACE_COLUMNS if c not in df.columns]
        if missing:
            raise InputError(f'Trace is missing column(s): {", ".join(missing)}.')
        return cls(records=[tuple(r) for r in df[TRACE_COLUMNS].itertuples(index=False)])

    @classmethod
    def from_csv(cls, path):
        return cls.from_frame(read_csv(path))

    def best(self):
        """
        The accepted row (lowest criterion, ties to the larger bandwidth) per covariate and iteration.
        """
        df = self.to_frame()
        if df.empty:
            return df
        df = df[np.isfinite(df['criterion'])]
        df = df.sort_values(['covariate', 'iteration', 'criterion', 'bandwidth'], ascending=[True, True, True, False], kind='mergesort')
        return df.groupby(['covariate', 'iteration'], sort=True).head(1).reset_index(drop=True)


def golden_section_bandwidth_search(evaluate, k_min, k_max):
    """
    Golden-section search on the integer lattice [k_min, k_max].

    The bracket shrinks until it is at most 4 wide, then is scanned
    exhaustively. Ties go to the larger bandwidth.

    :param evaluate: callable bandwidth -> criterion
    :returns: (bandwidth, criterion as returned by evaluate)
    """
    k_min, k_max = int(k_min), int(k_max)
    if k_min < 2 or k_min > k_max:
        raise ParameterError(f'Invalid bandwidth range [{k_min}, {k_max}].')
    cache = {}

    def f(k):
        if k not in cache:
            cache[k] = evaluate(k)
        return _score(cache[k])

    a, b = k_min, k_max
    while b - a > 4:
        c = a + int(round((b - a) * (1.0 - INVPHI)))
        d = a + int(round((b - a) * INVPHI))
        if f(c) < f(d):
            b = d
        else:
            a = c
    for k in range(a, b + 1):
        f(k)
    best = min(cache, key=lambda k: (_score(cache[k]), -k))
    if math.isinf(_score(cache[best])):
        raise CalibrationError(f'No feasible bandwidth in [{k_min}, {k_max}].')
    return best, cache[best]


def _alpha_key(alpha):
    return round(min(1.0, max(0.0, float(alpha))), 12)


def _best_alpha(cache):
    best = min(cache, key=lambda a: (_score(cache[a]), -a))
    if math.isinf(_score(cache[best])):
        raise InfeasibleCandidateError('No feasible alpha in [0, 1].')
    return best


def alpha_search_dnc(evaluate, epsilon=DNC_EPSILON, grid_step=DNC_GRID_STEP):
    """
    Divide and conquer over alpha in [0, 1].

    A coarse grid (endpoints included) is evaluated, then the step is halved
    around the incumbent until it is at most epsilon. Ties go to the larger alpha.

    :param evaluate: callable alpha -> criterion
    :returns: (alpha, criterion)
    """
    if not 0 < epsilon < 1:
        raise ParameterError(f'epsilon must be within (0, 1), got {epsilon}.')
    if not 0 < grid_step <= 0.5:
        raise ParameterError(f'grid_step must be within (0, 0.5], got {grid_step}.')
    cache = {}

    def f(alpha):
        key = _alpha_key(alpha)
        if key not in cache:
            cache[key] = evaluate(key)

    n_cells = int(round(1.0 / grid_step))
    for i in range(n_cells + 1):
        f(min(1.0, i * grid_step))
    f(1.0)
    best = _best_alpha(cache)
    step = grid_step
    while step > epsilon:
        step /= 2.0
        for candidate in (best - step, best + step):
            if 0.0 <= candidate <= 1.0:
                f(candidate)
        best = _best_alpha(cache)
    return best, cache[best]


def alpha_search_greedy(evaluate, seeds=GREEDY_SEEDS, step=GREEDY_STEP, refine_step=GREEDY_REFINE_STEP):
    """
    Greedy hill-climbing over alpha from several seeds.

    From each seed, move by +/- step (clamped to [0, 1]) while the criterion
    strictly improves. The winner is optionally polished with a second climb at
    refine_step. alpha = 1 is always evaluated. Ties go to the larger alpha.

    :param evaluate: callable alpha -> criterion
    :returns: (alpha, criterion)
    """
    if not step > 0:
        raise ParameterError(f'step must be positive, got {step}.')
    seeds = [validate_unit_interval(s, 'seed') for s in seeds]
    cache = {}

    def f(alpha):
        key = _alpha_key(alpha)
        if key not in cache:
            cache[key] = evaluate(key)
        return _score(cache[key])

    def climb(start, h):
        current = _alpha_key(start)
        f(current)
        while True:
            neighbors = sorted({_alpha_key(current - h), _alpha_key(current + h)} - {current})
            if not neighbors:
                return current
            candidate = min(neighbors, key=lambda a: (f(a), -a))
            if f(candidate) < f(current):
                current = candidate
            else:
                return current

    f(1.0)
    for seed in seeds:
        climb(seed, step)
    best = _best_alpha(cache)
    if refine_step:
        climb(best, refine_step)
        best = _best_alpha(cache)
    return best, cache[best]


def alpha_searcher(kind=AlphaSearch.DNC, epsilon=DNC_EPSILON, seeds=GREEDY_SEEDS, step=GREEDY_STEP, refine_step=GREEDY_REFINE_STEP):
    """
    Returns a callable evaluate -> (alpha, criterion) for the chosen strategy.
    """
    kind = validate_choice(kind, AlphaSearch, 'alpha_search')
    if kind is AlphaSearch.DNC:
        return partial(alpha_search_dnc, epsilon=epsilon)
    return partial(alpha_search_greedy, seeds=tuple(seeds), step=step, refine_step=refine_step)
