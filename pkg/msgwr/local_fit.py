"""
Weighted least squares at regression points.

Per-point operations (weighted_least_squares, smoothing_operator_row) work on one
weight vector. The batched helpers solve all n local systems of a weight matrix
at once (row i of W holds the weights of regression point i) and are what the
estimators call.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import InputError, SingularityError
from .geometry import as_coordinates
from .logging import getLogger
from .utils import chunk_slices, parallel_map
from .validation import validate_finite

logger = getLogger(__name__)

RCOND_TOL = 1e-12
RIDGE_SCALE = 1e-8
LEVERAGE_TOL = 1e-10


@dataclass(frozen=True)
class Dataset:
    """
    Observations of one study area.

    :param coords: (n, 2) projected coordinates
    :param y: (n,) response
    :param X: (n, m) design matrix, column 0 the intercept of ones
    :param names: m labels, names[0] for the intercept
    """
    coords: np.ndarray
    y: np.ndarray
    X: np.ndarray
    names: tuple

    def __post_init__(self):
        coords = as_coordinates(self.coords)
        y = validate_finite(self.y, 'response')
        X = validate_finite(self.X, 'design matrix')
        if y.ndim != 1:
            raise InputError(f'Response must be one-dimensional, got shape {y.shape}.')
        if X.ndim != 2 or X.shape[0] != y.shape[0] or coords.shape[0] != y.shape[0]:
            raise InputError(f'Shapes disagree: coords {coords.shape}, y {y.shape}, X {X.shape}.')
        if len(self.names) != X.shape[1]:
            raise InputError(f'{len(self.names)} names given for {X.shape[1]} design columns.')
        if not np.all(X[:, 0] == 1.0):
            raise InputError('Column 0 of the design matrix must be the intercept (all ones).')
        if np.linalg.matrix_rank(X) < X.shape[1]:
            raise InputError('Design matrix is rank deficient.')
        cond = np.linalg.cond(X)
        if cond > 1e10:
            logger.warning(f'Design matrix is nearly rank deficient (condition number {cond:.3g}).')
        object.__setattr__(self, 'coords', coords)
        object.__setattr__(self, 'y', y)
        object.__setattr__(self, 'X', X)
        object.__setattr__(self, 'names', tuple(str(n) for n in self.names))

    @classmethod
    def from_arrays(cls, coords, y, predictors, names, intercept_name='Intercept'):
        """
        Builds a Dataset, prepending the intercept column.

        :param predictors: (n, p) predictor values
        :param names: p predictor names
        """
        predictors = np.asarray(predictors, dtype=float)
        if predictors.ndim == 1:
            predictors = predictors[:, None]
        X = np.column_stack([np.ones(predictors.shape[0]), predictors])
        return cls(coords=coords, y=np.asarray(y, dtype=float), X=X, names=(intercept_name, *names))

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def m(self):
        return self.X.shape[1]

    def replace(self, y=None, X=None):
        return Dataset(coords=self.coords, y=self.y if y is None else y, X=self.X if X is None else X, names=self.names)


@dataclass(frozen=True)
class LocalFitRow:
    beta: np.ndarray
    hat_row: np.ndarray
    leverage: float
    point_index: int
    ridge: bool = False


@dataclass
class LocalRegressions:
    """
    Solutions of all n local systems for one weight matrix.

    :param beta: (n, m) local coefficients
    :param leverage: (n,) hat diagonal s_ii
    :param projection: (n, m, n) rows of (X'W_iX)^-1 X'W_i, when requested
    :param ridge_points: indices where the ridge fallback was applied
    """
    beta: np.ndarray
    leverage: np.ndarray
    projection: np.ndarray = None
    ridge_points: list = field(default_factory=list)

    def fitted(self, X):
        return (self.beta * X).sum(axis=1)


def _rcond(A):
    with np.errstate(divide='ignore', invalid='ignore'):
        cond = np.linalg.cond(A)
    return np.where(np.isfinite(cond), 1.0 / cond, 0.0)


def _ridge(XtWX, points):
    m = XtWX.shape[-1]
    for i in points:
        lam = RIDGE_SCALE * np.trace(XtWX[i]) / m
        XtWX[i] = XtWX[i] + lam * np.eye(m)
    return XtWX


def check_support(W, m):
    """
    Raises SingularityError at the first regression point with fewer than m positive weights.
    """
    W = np.atleast_2d(W)
    counts = (W > 0).sum(axis=1)
    short = np.flatnonzero(counts < m)
    if len(short):
        i = int(short[0])
        raise SingularityError(f'Point {i} has {counts[i]} positively weighted observations, {m} needed.', point_index=i)


def weighted_least_squares(X, y, w, point_index, ridge=False):
    """
    Local fit at one regression point.

    :param X: (n, m) design matrix
    :param y: (n,) response
    :param w: (n,) weights of the regression point
    :param point_index: (int) the regression point i
    :param ridge: (bool) add a tiny ridge instead of failing on a singular system
    :returns: LocalFitRow with beta solving (X'WX) beta = X'Wy and hat row x_i'(X'WX)^-1 X'W
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    m = X.shape[1]
    if (w > 0).sum() < m:
        raise SingularityError(f'Point {point_index} has fewer than {m} positively weighted observations.', point_index=point_index)
    XtW = X.T * w
    XtWX = XtW @ X
    used_ridge = False
    if _rcond(XtWX) < RCOND_TOL:
        if not ridge:
            raise SingularityError(f'Local normal equations are singular at point {point_index}.', point_index=point_index)
        XtWX = _ridge(XtWX[None], [0])[0]
        used_ridge = True
        logger.warning(f'Ridge fallback applied at point {point_index}.')
    lu = scipy.linalg.lu_factor(XtWX)
    beta = scipy.linalg.lu_solve(lu, XtW @ y)
    C = scipy.linalg.lu_solve(lu, XtW)
    hat_row = X[point_index] @ C
    leverage = float(hat_row[point_index])
    if not (-LEVERAGE_TOL <= leverage <= 1 + LEVERAGE_TOL):
        logger.warning(f'Leverage {leverage:.6g} outside [0, 1] at point {point_index}.')
    return LocalFitRow(beta=beta, hat_row=hat_row, leverage=leverage, point_index=int(point_index), ridge=used_ridge)


def smoothing_operator_row(x_j, w, i):
    """
    Single-covariate smoother row x_ij (x_j'W x_j)^-1 x_j'W.

    :param x_j: (n,) covariate column
    :param w: (n,) combined weights of regression point i
    :param i: (int) regression point
    :returns: (n,) row mapping a working response to the fitted contribution of x_j at i
    """
    x_j = np.asarray(x_j, dtype=float)
    w = np.asarray(w, dtype=float)
    den = float(np.sum(w * x_j ** 2))
    if not den > RCOND_TOL * max(float(np.sum(w)), 1.0):
        raise SingularityError(f'Covariate is zero on the weighted support of point {i}.', point_index=i)
    return x_j[i] * w * x_j / den


def local_normal_equations(X, y, W, threads=1):
    """
    X'W_iX and X'W_iy for every regression point.

    :param W: (n_points, n) weight matrix
    :returns: ((n_points, m, m), (n_points, m))
    """
    n_points = W.shape[0]
    m = X.shape[1]
    XtWX = np.empty((n_points, m, m))

    def work(sl):
        XtWX[sl] = np.einsum('il,lj,lk->ijk', W[sl], X, X, optimize=True)

    parallel_map(work, chunk_slices(n_points, threads), threads=threads)
    XtWy = W @ (X * y[:, None])
    return XtWX, XtWy


def solve_local_systems(XtWX, XtWy, X, self_weights, ridge=False):
    """
    Solves the local normal equations of every point.

    :param self_weights: (n,) weight each point gives itself, w_ii
    :returns: (LocalRegressions without projection, X'WX after any ridge)
    """
    XtWX = np.array(XtWX, dtype=float)
    bad = np.flatnonzero(_rcond(XtWX) < RCOND_TOL)
    ridge_points = []
    if len(bad):
        if not ridge:
            i = int(bad[0])
            raise SingularityError(f'Local normal equations are singular at point {i}.', point_index=i)
        XtWX = _ridge(XtWX, bad)
        ridge_points = [int(i) for i in bad]
        logger.warning(f'Ridge fallback applied at {len(bad)} point(s).')
    beta = np.linalg.solve(XtWX, XtWy[..., None])[..., 0]
    v = np.linalg.solve(XtWX, X[..., None])[..., 0]
    leverage = self_weights * (X * v).sum(axis=1)
    return LocalRegressions(beta=beta, leverage=leverage, ridge_points=ridge_points), XtWX


def fit_local_regressions(X, y, W, ridge=False, threads=1, with_projection=False):
    """
    All local WLS fits for weight matrix W (row i for regression point i).

    :returns: LocalRegressions
    """
    X = np.asarray(X, dtype=float)
    W = np.asarray(W, dtype=float)
    check_support(W, X.shape[1])
    XtWX, XtWy = local_normal_equations(X, y, W, threads=threads)
    fits, XtWX = solve_local_systems(XtWX, XtWy, X, np.diagonal(W).copy(), ridge=ridge)
    if with_projection:
        fits.projection = np.linalg.solve(XtWX, X.T[None, :, :] * W[:, None, :])
    outside = np.flatnonzero((fits.leverage < -LEVERAGE_TOL) | (fits.leverage > 1 + LEVERAGE_TOL))
    if len(outside):
        logger.warning(f'{len(outside)} leverage value(s) outside [0, 1], first at point {int(outside[0])}.')
    return fits
