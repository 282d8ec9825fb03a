"""
The five fitters: OLS, GWR, SGWR, MGWR and M-SGWR.

Single-scale models (GWR, SGWR) share one bandwidth and one alpha across all
covariates and are fit jointly. Multiscale models (MGWR, M-SGWR) are fit by
backfitting, one covariate at a time on partial residuals, while tracking the
per-covariate projection matrices R_j needed for inference.

Combined weights are linear in alpha, so for a fixed bandwidth the local
normal equations are formed once for the geographic and once for the attribute
weights and then mixed per alpha candidate.
"""

import math
import warnings
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
import pandas as pd
from scipy import stats

from .diagnostics import MetricBundle, fit_metrics
from .enum import AlphaSearch, Criterion, Kernel, Model, SOCKind
from .errors import CalibrationError, ConvergenceWarning, InfeasibleCandidateError, NumericError, ParameterError, SingularityError
from .geometry import NeighborIndex
from .local_fit import RCOND_TOL, fit_local_regressions, local_normal_equations, solve_local_systems
from .logging import getLogger
from .model_selection import (DNC_EPSILON, GREEDY_REFINE_STEP, GREEDY_SEEDS, GREEDY_STEP, CriterionValue,
                              SearchTrace, alpha_searcher, evaluate_criterion, golden_section_bandwidth_search)
from .validation import validate_choice, validate_neighbor_count, validate_unit_interval
from .weights import RHO, attribute_weight_matrix, combine_weights, geographic_weight_matrix, pooled_attribute_weight_matrix

logger = getLogger(__name__)

PHI = 1e-5
MAX_ITERS = 200
GEO_CACHE_SIZE = 8
ALL_COVARIATES = -1


@dataclass(frozen=True)
class ScaleConfig:
    """
    Per-covariate bandwidth (neighbor count) and alpha.

    :param bandwidths: m neighbor counts
    :param alphas: m values in [0, 1]
    """
    bandwidths: tuple
    alphas: tuple

    def __post_init__(self):
        if len(self.bandwidths) != len(self.alphas):
            raise ParameterError(f'{len(self.bandwidths)} bandwidths for {len(self.alphas)} alphas.')
        for k in self.bandwidths:
            validate_neighbor_count(k, 2, math.inf)
        object.__setattr__(self, 'bandwidths', tuple(int(k) for k in self.bandwidths))
        object.__setattr__(self, 'alphas', tuple(validate_unit_interval(a, 'alpha') for a in self.alphas))

    def validate(self, k_min, k_max):
        for k in self.bandwidths:
            validate_neighbor_count(k, k_min, k_max)
        return self

    def to_frame(self, names=None):
        names = names if names is not None else [f'x{j}' for j in range(len(self.bandwidths))]
        return pd.DataFrame({'covariate': list(names), 'bandwidth': list(self.bandwidths), 'alpha': list(self.alphas)})


@dataclass(frozen=True)
class FitOptions:
    """
    Numeric settings shared by the fitters.

    :param bw_min: lower bandwidth bound, defaults to m + 2
    :param bw_max: upper bandwidth bound, defaults to n
    """
    criterion: Criterion = Criterion.AICC
    alpha_search: AlphaSearch = AlphaSearch.DNC
    epsilon: float = DNC_EPSILON
    greedy_seeds: tuple = GREEDY_SEEDS
    greedy_step: float = GREEDY_STEP
    greedy_refine_step: float = GREEDY_REFINE_STEP
    rho: float = RHO
    ddof: int = 0
    ridge: bool = False
    threads: int = 1
    bw_min: int = None
    bw_max: int = None

    def __post_init__(self):
        object.__setattr__(self, 'criterion', validate_choice(self.criterion, Criterion, 'criterion'))
        object.__setattr__(self, 'alpha_search', validate_choice(self.alpha_search, AlphaSearch, 'alpha_search'))
        object.__setattr__(self, 'greedy_seeds', tuple(self.greedy_seeds))
        if not self.rho > 0:
            raise ParameterError(f'rho must be positive, got {self.rho}.')
        if self.ddof not in (0, 1):
            raise ParameterError(f'ddof must be 0 or 1, got {self.ddof}.')
        if int(self.threads) < 1:
            raise ParameterError(f'threads must be at least 1, got {self.threads}.')

    def bandwidth_range(self, data):
        k_min = data.m + 2 if self.bw_min is None else int(self.bw_min)
        k_max = data.n if self.bw_max is None else int(self.bw_max)
        if k_min < data.m + 2 or k_max > data.n or k_min > k_max:
            raise ParameterError(f'Bandwidth range [{k_min}, {k_max}] must lie within [{data.m + 2}, {data.n}] and be nonempty.')
        return k_min, k_max

    def searcher(self):
        return alpha_searcher(
            self.alpha_search,
            epsilon=self.epsilon,
            seeds=self.greedy_seeds,
            step=self.greedy_step,
            refine_step=self.greedy_refine_step,
        )


@dataclass
class FitResult:
    """
    Calibrated model.

    Arrays are (n, m) unless noted; se and t_values are nan where a
    covariate is zero at the location.
    """
    model: Model
    names: tuple
    beta: np.ndarray
    se: np.ndarray
    t_values: np.ndarray
    fitted: np.ndarray
    residuals: np.ndarray
    leverage: np.ndarray
    enp_per_covariate: np.ndarray
    enp_model: float
    sigma2_hat: float
    scales: ScaleConfig
    diagnostics: MetricBundle
    criterion: CriterionValue
    trace: SearchTrace = field(default_factory=SearchTrace)
    converged: bool = True
    iterations: int = 0
    soc_history: list = field(default_factory=list)
    ridge_points: list = field(default_factory=list)

    @property
    def n(self):
        return self.beta.shape[0]

    @property
    def m(self):
        return self.beta.shape[1]

    def critical_t(self, alpha=0.05):
        """
        Two-sided critical |t| per covariate, the level divided by that covariate's ENP.

        :returns: (m,) array
        """
        enp = np.maximum(self.enp_per_covariate, 1.0)
        return stats.t.ppf(1.0 - (alpha / enp) / 2.0, self.n - 1)

    def significant_share(self, alpha=0.05):
        """
        Share of locations where |t| exceeds the covariate's critical value.
        """
        with np.errstate(invalid='ignore'):
            return (np.abs(self.t_values) > self.critical_t(alpha)[None, :]).mean(axis=0)

    def coefficient_summary(self, alpha=0.05):
        """
        Distribution of each local coefficient across locations.

        :returns: pd.DataFrame, one row per covariate
        """
        return pd.DataFrame({
            'covariate': list(self.names),
            'mean': self.beta.mean(axis=0),
            'sd': self.beta.std(axis=0),
            'min': self.beta.min(axis=0),
            'median': np.median(self.beta, axis=0),
            'max': self.beta.max(axis=0),
            'enp': self.enp_per_covariate,
            'critical_t': self.critical_t(alpha),
            'significant_share': self.significant_share(alpha),
        })


@dataclass
class BackfitState:
    """
    Working state of the backfitting loop.

    :param beta: (n, m) coefficients
    :param XB: (n, m) per-covariate fitted contributions beta_j * x_j
    :param residual: (n,) y - XB.sum(axis=1)
    :param R: (m, n, n) per-covariate projections, XB[:, j] = R[j] @ y
    :param S: (n, n) sum of R over covariates
    """
    beta: np.ndarray
    XB: np.ndarray
    residual: np.ndarray
    R: np.ndarray
    S: np.ndarray
    iteration: int = 0
    soc: float = math.inf

    @property
    def rss(self):
        return float(self.residual @ self.residual)


def _sigma2(residuals, trace_S):
    n = residuals.shape[0]
    dof = n - trace_S
    if not dof > 0:
        raise NumericError(f'Residual degrees of freedom n - tr(S) = {dof:.6g} must be positive.')
    return float(residuals @ residuals) / dof


def _t_values(beta, se):
    with np.errstate(divide='ignore', invalid='ignore'):
        return np.where(se > 0, beta / se, np.nan)


class _GeographicWeights:
    """
    Bi-square weight matrices keyed by bandwidth, a few kept in memory.
    """

    def __init__(self, index):
        self.index = index
        self.matrix = lru_cache(maxsize=GEO_CACHE_SIZE)(self._build)

    def _build(self, k):
        return geographic_weight_matrix(self.index, k)


class _SingleScaleProblem:
    """
    Joint local regressions with one bandwidth and one alpha for all covariates.

    With attribute=False the weights are purely geographic (GWR).
    """

    def __init__(self, data, geo, options, attribute):
        self.data = data
        self.geo = geo
        self.options = options
        self.attribute = attribute
        self._k = None
        self._products = None

    def _prepare(self, k):
        if self._k != k:
            self._k = k
            try:
                X, y = self.data.X, self.data.y
                G = self.geo.matrix(k)
                if ((G > 0).sum(axis=1) < self.data.m).any():
                    raise InfeasibleCandidateError(f'Bandwidth {k} leaves a point with fewer than {self.data.m} neighbors.')
                XtGX, XtGy = local_normal_equations(X, y, G, threads=self.options.threads)
                products = {'G': G, 'XtGX': XtGX, 'XtGy': XtGy}
                if self.attribute:
                    S = pooled_attribute_weight_matrix(X[:, 1:], G, rho=self.options.rho, ddof=self.options.ddof)
                    XtSX, XtSy = local_normal_equations(X, y, S, threads=self.options.threads)
                    products.update({'S': S, 'XtSX': XtSX, 'XtSy': XtSy})
                self._products = products
            except CalibrationError as e:
                self._products = e
        if isinstance(self._products, Exception):
            raise self._products
        return self._products

    def weights(self, k, alpha):
        P = self._prepare(k)
        if not self.attribute or alpha == 1.0:
            return P['G']
        return combine_weights(P['G'], P['S'], alpha)

    def criterion(self, k, alpha):
        kind = self.options.criterion
        try:
            P = self._prepare(k)
            if not self.attribute or alpha == 1.0:
                XtWX, XtWy, self_weights = P['XtGX'], P['XtGy'], np.diagonal(P['G'])
            else:
                XtWX = combine_weights(P['XtGX'], P['XtSX'], alpha)
                XtWy = combine_weights(P['XtGy'], P['XtSy'], alpha)
                self_weights = combine_weights(np.diagonal(P['G']), np.diagonal(P['S']), alpha)
            fits, _ = solve_local_systems(XtWX, XtWy, self.data.X, self_weights, ridge=self.options.ridge)
        except CalibrationError as e:
            logger.debug(f'Bandwidth {k}, alpha {alpha}: infeasible ({e}).')
            return CriterionValue.infeasible(kind)
        residuals = self.data.y - fits.fitted(self.data.X)
        return evaluate_criterion(kind, residuals, fits.leverage)


class _CovariateProblem:
    """
    Univariate local regressions of a partial residual r on one covariate x.

    For bandwidth k the smoothed moments G @ x**2 and G @ (x * r) (and their
    attribute counterparts) are formed once; each alpha then costs O(n).
    """

    def __init__(self, x, r, geo, options, attribute):
        self.x = x
        self.r = r
        self.geo = geo
        self.options = options
        self.attribute = attribute
        self._k = None
        self._moments = None

    def _prepare(self, k):
        if self._k != k:
            self._k = k
            try:
                G = self.geo.matrix(k)
                x2, xr = self.x ** 2, self.x * self.r
                moments = {'G': G, 'g': (G @ x2, G @ xr, G.sum(axis=1), np.diagonal(G))}
                if self.attribute:
                    S = attribute_weight_matrix(self.x, G, rho=self.options.rho, ddof=self.options.ddof)
                    moments.update({'S': S, 's': (S @ x2, S @ xr, S.sum(axis=1), np.diagonal(S))})
                self._moments = moments
            except CalibrationError as e:
                self._moments = e
        if isinstance(self._moments, Exception):
            raise self._moments
        return self._moments

    def _solve(self, k, alpha):
        M = self._prepare(k)
        if not self.attribute or alpha == 1.0:
            den, num, total, self_weights = M['g']
        else:
            den, num, total, self_weights = (combine_weights(g, s, alpha) for g, s in zip(M['g'], M['s']))
        bad = np.flatnonzero(~(den > RCOND_TOL * np.maximum(total, 1.0)))
        if len(bad):
            i = int(bad[0])
            raise SingularityError(f'Covariate is zero on the weighted support of point {i}.', point_index=i)
        return num / den, den, self_weights

    def weights(self, k, alpha):
        M = self._prepare(k)
        if not self.attribute or alpha == 1.0:
            return M['G']
        return combine_weights(M['G'], M['S'], alpha)

    def criterion(self, k, alpha):
        kind = self.options.criterion
        try:
            beta, den, self_weights = self._solve(k, alpha)
        except CalibrationError as e:
            logger.debug(f'Bandwidth {k}, alpha {alpha}: infeasible ({e}).')
            return CriterionValue.infeasible(kind)
        residuals = self.r - self.x * beta
        return evaluate_criterion(kind, residuals, self_weights * self.x ** 2 / den)

    def model_criterion(self, k, alpha, carry, other_leverage):
        """
        Criterion of the whole model once this covariate is refit at (k, alpha).

        The new projection is A_j @ carry, so its diagonal costs O(n^2) without
        forming the product.

        :param carry: (n, n) I - S + R_j of the current state
        :param other_leverage: (n,) diag(S - R_j), the other covariates' share of the hat diagonal
        """
        kind = self.options.criterion
        try:
            beta, den, _ = self._solve(k, alpha)
        except CalibrationError:
            return CriterionValue.infeasible(kind)
        own = self.x / den * np.einsum('il,l,li->i', self.weights(k, alpha), self.x, carry)
        return evaluate_criterion(kind, self.r - self.x * beta, other_leverage + own)

    def fit(self, k, alpha):
        """
        :returns: (beta_j (n,), A_j (n, n)) with A_j @ r the fitted contribution of x
        """
        beta, den, _ = self._solve(k, alpha)
        A = self.x[:, None] * self.weights(k, alpha) * self.x[None, :] / den[:, None]
        return beta, A


def _scale_search(problem, evaluate_at, searcher, k_range, covariate, iteration, trace, bandwidth=None, alpha=None):
    """
    Chooses (bandwidth, alpha) for one problem: golden-section over bandwidths,
    and for each tried bandwidth the alpha search, unless pinned.

    :returns: (bandwidth, alpha, CriterionValue)
    """
    chosen = {}
    kind = problem.options.criterion

    def evaluate(k):
        if not problem.attribute:
            a, crit = 1.0, evaluate_at(k, 1.0)
        elif alpha is not None:
            a, crit = alpha, evaluate_at(k, alpha)
        else:
            try:
                a, crit = searcher(lambda a: evaluate_at(k, a))
            except InfeasibleCandidateError:
                a, crit = float('nan'), CriterionValue.infeasible(kind)
        chosen[k] = a
        trace.record(covariate, k, a, crit, iteration)
        logger.debug(f'Covariate {covariate}, bandwidth {k}: alpha {a}, criterion {crit.value:.6g}.')
        return crit

    if bandwidth is not None:
        crit = evaluate(bandwidth)
        if math.isnan(chosen[bandwidth]):
            raise CalibrationError(f'No feasible alpha at the pinned bandwidth {bandwidth}.')
        return bandwidth, chosen[bandwidth], crit
    k, crit = golden_section_bandwidth_search(evaluate, *k_range)
    return k, chosen[k], crit


def _prefer_geographic(problem, k, alpha, carry, other_leverage, k_range, covariate, iteration, trace, bandwidth=None):
    """
    Keeps a mixed scale only when it lowers the whole-model criterion below the
    best purely geographic scale of the same covariate; ties go to geography.

    :returns: (bandwidth, alpha)
    """
    geographic = _CovariateProblem(problem.x, problem.r, problem.geo, problem.options, attribute=False)
    try:
        k_geo, _, _ = _scale_search(geographic, geographic.criterion, None, k_range, covariate, iteration, trace, bandwidth=bandwidth)
    except CalibrationError:
        return k, alpha
    mixed = problem.model_criterion(k, alpha, carry, other_leverage)
    plain = geographic.model_criterion(k_geo, 1.0, carry, other_leverage)
    if mixed.score < plain.score:
        return k, alpha
    logger.debug(f'Covariate {covariate}: alpha {alpha} at bandwidth {k} does not improve the model '
                 f'({mixed.value:.6g} vs {plain.value:.6g}); alpha 1 at bandwidth {k_geo}.')
    return k_geo, 1.0


def _resolve_options(options, criterion=None, alpha_search=None):
    options = options if options is not None else FitOptions()
    if criterion is not None:
        options = replace(options, criterion=criterion)
    if alpha_search is not None:
        options = replace(options, alpha_search=alpha_search)
    return options


def fit_ols(data, criterion=Criterion.AICC):
    """
    Global least squares with coefficients replicated at every location.

    :param data: Dataset
    :returns: FitResult with classical standard errors
    """
    kind = validate_choice(criterion, Criterion, 'criterion')
    X, y = data.X, data.y
    n, m = X.shape
    C = np.linalg.solve(X.T @ X, X.T)
    coef = C @ y
    fitted = X @ coef
    residuals = y - fitted
    leverage = (X * C.T).sum(axis=1)
    sigma2_hat = _sigma2(residuals, float(m))
    se = np.sqrt(sigma2_hat * (C ** 2).sum(axis=1))
    beta = np.tile(coef, (n, 1))
    se = np.tile(se, (n, 1))
    enp = (X * C.T).sum(axis=0)
    logger.info(f'OLS: RSS {float(residuals @ residuals):.6g}.')
    return FitResult(
        model=Model.OLS,
        names=data.names,
        beta=beta,
        se=se,
        t_values=_t_values(beta, se),
        fitted=fitted,
        residuals=residuals,
        leverage=leverage,
        enp_per_covariate=enp,
        enp_model=float(m),
        sigma2_hat=sigma2_hat,
        scales=None,
        diagnostics=fit_metrics(y, fitted, float(m), leverage),
        criterion=evaluate_criterion(kind, residuals, leverage),
    )


def _single_scale_fit(model, data, options, attribute, bandwidth=None, alpha=None, index=None, geo=None):
    """
    Selects and fits a single-scale model, with projection-based inference.

    :returns: (FitResult, projection (n, m, n))
    """
    geo = geo if geo is not None else _GeographicWeights(index if index is not None else NeighborIndex(data.coords))
    k_range = options.bandwidth_range(data)
    if bandwidth is not None:
        bandwidth = validate_neighbor_count(bandwidth, *k_range)
    if alpha is not None:
        alpha = validate_unit_interval(alpha, 'alpha')
    problem = _SingleScaleProblem(data, geo, options, attribute)
    trace = SearchTrace()
    k, a, _ = _scale_search(problem, problem.criterion, options.searcher(), k_range, ALL_COVARIATES, 0, trace, bandwidth=bandwidth, alpha=alpha)
    logger.info(f'{model.value}: bandwidth {k}, alpha {a}.')

    X, y = data.X, data.y
    fits = fit_local_regressions(X, y, problem.weights(k, a), ridge=options.ridge, threads=options.threads, with_projection=True)
    C = fits.projection
    fitted = fits.fitted(X)
    residuals = y - fitted
    trace_S = float(fits.leverage.sum())
    sigma2_hat = _sigma2(residuals, trace_S)
    se = np.sqrt(sigma2_hat * (C ** 2).sum(axis=2))
    result = FitResult(
        model=model,
        names=data.names,
        beta=fits.beta,
        se=se,
        t_values=_t_values(fits.beta, se),
        fitted=fitted,
        residuals=residuals,
        leverage=fits.leverage,
        enp_per_covariate=np.einsum('ij,iji->j', X, C),
        enp_model=trace_S,
        sigma2_hat=sigma2_hat,
        scales=ScaleConfig((k,) * data.m, (a,) * data.m).validate(*k_range),
        diagnostics=fit_metrics(y, fitted, trace_S, fits.leverage),
        criterion=evaluate_criterion(options.criterion, residuals, fits.leverage),
        trace=trace,
        ridge_points=fits.ridge_points,
    )
    return result, C


def fit_gwr(data, criterion=None, kernel=Kernel.ADAPTIVE_BISQUARE, options=None, bandwidth=None):
    """
    Geographically weighted regression with one adaptive bandwidth.

    :param data: Dataset
    :param criterion: Criterion, overrides options.criterion
    :param kernel: Kernel, only the adaptive bi-square kernel is available
    :param bandwidth: (int) pins the bandwidth instead of searching
    :returns: FitResult
    """
    validate_choice(kernel, Kernel, 'kernel')
    options = _resolve_options(options, criterion)
    return _single_scale_fit(Model.GWR, data, options, attribute=False, bandwidth=bandwidth)[0]


def fit_sgwr(data, criterion=None, alpha_search=None, options=None, bandwidth=None, alpha=None):
    """
    Similarity and geographically weighted regression: one bandwidth and one
    global alpha, the attribute similarity pooled over all covariates.

    :param bandwidth: (int) pins the bandwidth
    :param alpha: (float) pins alpha
    :returns: FitResult
    """
    options = _resolve_options(options, criterion, alpha_search)
    return _single_scale_fit(Model.SGWR, data, options, attribute=True, bandwidth=bandwidth, alpha=alpha)[0]


def _pins(values, m, name):
    if values is None:
        return [None] * m
    values = list(values)
    if len(values) != m:
        raise ParameterError(f'{len(values)} {name} given for {m} covariates.')
    return values


def _soc(kind, state, XB_old, rss_old):
    if kind is SOCKind.RSS:
        rss = state.rss
        return abs(rss - rss_old) / rss if rss > 0 else 0.0
    num = float(np.sum((state.XB - XB_old) ** 2)) / state.XB.shape[0]
    den = float(np.sum(state.XB.sum(axis=1) ** 2))
    return math.sqrt(num / den) if den > 0 else 0.0


def fit_msgwr(data, criterion=None, alpha_search=None, mode=Model.MSGWR, phi=PHI, soc_kind=SOCKind.COEF,
              max_iters=MAX_ITERS, options=None, bandwidths=None, alphas=None):
    """
    Multiscale fit by backfitting.

    Each sweep visits the covariates in order. For covariate j the partial
    residual r = residual + beta_j * x_j is regressed locally on x_j, the
    bandwidth chosen by golden-section and, per tried bandwidth, alpha by the
    alpha search (alpha fixed to 1 in MGWR mode). A searched alpha below 1 is
    kept only if the whole model's criterion beats that of the best alpha-1
    bandwidth. R_j is updated as A_j (I - S + R_j).

    A constant covariate (the intercept) has no attribute contrast, so its
    alpha is 1 unless pinned otherwise.

    When every bandwidth is pinned to one value and every alpha to one value,
    no backfitting runs: the single-scale model (GWR, or SGWR when alpha < 1)
    is fit directly and returned with iterations = 0.

    :param mode: Model.MSGWR or Model.MGWR
    :param phi: (float) convergence tolerance on the score of change
    :param soc_kind: SOCKind, coefficient- or RSS-based score of change
    :param max_iters: (int) sweep cap; hitting it emits a ConvergenceWarning
    :param bandwidths: m pinned bandwidths, None entries searched
    :param alphas: m pinned alphas, None entries searched
    :returns: FitResult
    """
    mode = validate_choice(mode, Model, 'mode')
    if mode not in (Model.MGWR, Model.MSGWR):
        raise ParameterError(f'mode must be mgwr or msgwr, got {mode.value}.')
    soc_kind = validate_choice(soc_kind, SOCKind, 'soc_kind')
    if not phi > 0:
        raise ParameterError(f'phi must be positive, got {phi}.')
    if int(max_iters) < 1:
        raise ParameterError(f'max_iters must be at least 1, got {max_iters}.')
    options = _resolve_options(options, criterion, alpha_search)
    X, y = data.X, data.y
    n, m = X.shape
    k_range = options.bandwidth_range(data)

    bw_pins = [None if k is None else validate_neighbor_count(k, *k_range) for k in _pins(bandwidths, m, 'bandwidths')]
    if mode is Model.MGWR:
        alpha_pins = [1.0] * m
    else:
        alpha_pins = [None if a is None else validate_unit_interval(a, 'alpha') for a in _pins(alphas, m, 'alphas')]
        alpha_pins = [1.0 if a is None and np.ptp(X[:, j]) == 0 else a for j, a in enumerate(alpha_pins)]
    attribute = any(a is None or a != 1.0 for a in alpha_pins)

    geo = _GeographicWeights(NeighborIndex(data.coords))

    # equal pinned bandwidths with one shared pinned alpha is a single-scale model
    if None not in bw_pins and len(set(bw_pins)) == 1 and None not in alpha_pins and len(set(alpha_pins)) == 1:
        logger.info(f'{mode.value}: all scales pinned equal, fitting the single-scale model.')
        result, _ = _single_scale_fit(mode, data, options, attribute=attribute, bandwidth=bw_pins[0], alpha=alpha_pins[0], geo=geo)
        result.iterations = 0
        return result

    init, C = _single_scale_fit(Model.SGWR if attribute else Model.GWR, data, options, attribute=attribute, geo=geo)
    trace = init.trace
    R = X.T[:, :, None] * np.transpose(C, (1, 0, 2))
    state = BackfitState(
        beta=init.beta.copy(),
        XB=init.beta * X,
        residual=init.residuals.copy(),
        R=R,
        S=R.sum(axis=0),
    )
    del C
    searcher = options.searcher()
    eye = np.eye(n)
    chosen_k = list(init.scales.bandwidths)
    chosen_alpha = list(init.scales.alphas)
    soc_history = []
    converged = False

    for iteration in range(1, int(max_iters) + 1):
        XB_old = state.XB.copy()
        rss_old = state.rss
        for j in range(m):
            x = X[:, j]
            r = state.residual + state.XB[:, j]
            problem = _CovariateProblem(x, r, geo, options, attribute=attribute and alpha_pins[j] != 1.0)
            carry = eye - state.S + state.R[j]
            try:
                k, a, _ = _scale_search(problem, problem.criterion, searcher, k_range, j, iteration, trace,
                                        bandwidth=bw_pins[j], alpha=alpha_pins[j])
                if alpha_pins[j] is None and a != 1.0:
                    other_leverage = np.diagonal(state.S) - np.diagonal(state.R[j])
                    k, a = _prefer_geographic(problem, k, a, carry, other_leverage, k_range, j, iteration, trace, bandwidth=bw_pins[j])
            except CalibrationError as e:
                raise CalibrationError(f'Covariate {data.names[j]!r}: {e}') from e
            beta_j, A = problem.fit(k, a)
            state.beta[:, j] = beta_j
            state.XB[:, j] = beta_j * x
            state.residual = r - state.XB[:, j]
            state.R[j] = A @ carry
            state.S = state.R.sum(axis=0)
            chosen_k[j], chosen_alpha[j] = k, a
        state.iteration = iteration
        state.soc = _soc(soc_kind, state, XB_old, rss_old)
        soc_history.append(state.soc)
        logger.info(f'{mode.value} sweep {iteration}: SOC {state.soc:.6g}, bandwidths {chosen_k}, alphas {chosen_alpha}.')
        if state.soc <= phi:
            converged = True
            break

    if not converged:
        message = f'{mode.value} did not converge within {max_iters} sweeps (SOC {state.soc:.3g} > {phi}).'
        logger.warning(message)
        warnings.warn(message, ConvergenceWarning)

    fitted = state.XB.sum(axis=1)
    residuals = y - fitted
    leverage = np.diagonal(state.S).copy()
    trace_S = float(np.trace(state.S))
    sigma2_hat = _sigma2(residuals, trace_S)
    with np.errstate(divide='ignore', invalid='ignore'):
        var = sigma2_hat * (state.R ** 2).sum(axis=2).T / X ** 2
        se = np.where(X != 0, np.sqrt(var), np.nan)
    return FitResult(
        model=mode,
        names=data.names,
        beta=state.beta,
        se=se,
        t_values=_t_values(state.beta, se),
        fitted=fitted,
        residuals=residuals,
        leverage=leverage,
        enp_per_covariate=np.trace(state.R, axis1=1, axis2=2),
        enp_model=trace_S,
        sigma2_hat=sigma2_hat,
        scales=ScaleConfig(tuple(chosen_k), tuple(chosen_alpha)).validate(*k_range),
        diagnostics=fit_metrics(y, fitted, trace_S, leverage),
        criterion=evaluate_criterion(options.criterion, residuals, leverage),
        trace=trace,
        converged=converged,
        iterations=state.iteration,
        soc_history=soc_history,
        ridge_points=init.ridge_points,
    )


def fit_model(model, data, options=None, **kwargs):
    """
    Fits any of the five models by name.

    :param model: Model or its value
    :param kwargs: passed to the model's fitter
    """
    model = validate_choice(model, Model, 'model')
    options = options if options is not None else FitOptions()
    if model is Model.OLS:
        return fit_ols(data, criterion=options.criterion)
    if model is Model.GWR:
        return fit_gwr(data, options=options, **kwargs)
    if model is Model.SGWR:
        return fit_sgwr(data, options=options, **kwargs)
    return fit_msgwr(data, mode=model, options=options, **kwargs)
