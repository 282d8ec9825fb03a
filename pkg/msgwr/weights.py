"""
Geographic, attribute-similarity and combined weights.

Per regression point i and covariate j:
    w_geo    adaptive bi-square kernel on distance
    w_attr   0.5 ** ((x_l - x_i) / SD)**2 on the geographic neighbors of i,
             SD taken over that neighborhood
    w_comb   alpha * w_geo + (1 - alpha) * w_attr

The matrix builders stack these rows for all n points (row i = point i).
"""

from dataclasses import dataclass

import numpy as np

from .errors import CalibrationError, InfeasibleCandidateError, ParameterError
from .logging import getLogger
from .validation import validate_unit_interval

logger = getLogger(__name__)

RHO = 1e-5


@dataclass(frozen=True)
class WeightTriple:
    w_geo: np.ndarray
    w_attr: np.ndarray
    w_combined: np.ndarray
    alpha: float
    covariate_index: int
    point_index: int


def geographic_weights(row, radius):
    """
    Adaptive bi-square kernel.

    :param row: (n,) distances from the regression point
    :param radius: (float) kernel radius, > 0
    :returns: (n,) weights, (1 - (d/radius)**2)**2 where d < radius, else 0
    """
    if not radius > 0:
        raise ParameterError(f'Kernel radius must be positive, got {radius}.')
    row = np.asarray(row, dtype=float)
    w = (1.0 - (row / radius) ** 2) ** 2
    w[row >= radius] = 0.0
    return w


def _neighborhood_sd(x, mask, ddof):
    """
    Standard deviation of x over every row's neighborhood mask.

    :param x: (n,) values
    :param mask: (n_rows, n) boolean neighborhoods
    :returns: (n_rows,) standard deviations
    """
    counts = mask.sum(axis=1)
    if (counts - ddof <= 0).any():
        raise CalibrationError('Neighborhood too small for the attribute standard deviation; increase the bandwidth.')
    means = (mask @ x) / counts
    dev = np.where(mask, x[None, :] - means[:, None], 0.0)
    return np.sqrt((dev ** 2).sum(axis=1) / (counts - ddof))


def attribute_weights(x_j, i, neighbor_mask, rho=RHO, ddof=0):
    """
    Attribute similarity of every observation to point i for one covariate.

    :param x_j: (n,) covariate values
    :param i: (int) regression point
    :param neighbor_mask: (n,) boolean, the geographic neighbors of i (i included)
    :param rho: (float) replaces a zero neighborhood standard deviation
    :param ddof: (int) 0 for the population standard deviation, 1 for the sample one
    :returns: (n,) weights in [0, 1], zero outside the neighborhood
    """
    x_j = np.asarray(x_j, dtype=float)
    neighbor_mask = np.asarray(neighbor_mask, dtype=bool)
    if not neighbor_mask.any():
        raise CalibrationError(f'Empty neighborhood at point {i}; the bandwidth is too small.')
    sd = _neighborhood_sd(x_j, neighbor_mask[None, :], ddof)[0]
    sd = sd if sd > 0 else rho
    w = np.where(neighbor_mask, 0.5 ** (((x_j - x_j[i]) / sd) ** 2), 0.0)
    return w


def combine_weights(w_geo, w_attr, alpha):
    """
    Convex combination alpha * w_geo + (1 - alpha) * w_attr.

    Works elementwise on arrays of any matching shape.
    """
    alpha = validate_unit_interval(alpha, 'alpha')
    w_geo = np.asarray(w_geo, dtype=float)
    w_attr = np.asarray(w_attr, dtype=float)
    if w_geo.shape != w_attr.shape:
        raise ParameterError(f'Weight shapes differ: {w_geo.shape} vs {w_attr.shape}.')
    return alpha * w_geo + (1.0 - alpha) * w_attr


def weight_triple(distances, radius, x_j, i, alpha, covariate_index=0, rho=RHO, ddof=0):
    """
    The three weight vectors of covariate j at point i.

    :param distances: (n,) distances from point i
    :param radius: (float) kernel radius at point i
    """
    w_geo = geographic_weights(distances, radius)
    w_attr = attribute_weights(x_j, i, w_geo > 0, rho=rho, ddof=ddof)
    return WeightTriple(
        w_geo=w_geo,
        w_attr=w_attr,
        w_combined=combine_weights(w_geo, w_attr, alpha),
        alpha=float(alpha),
        covariate_index=int(covariate_index),
        point_index=int(i),
    )


def geographic_weight_matrix(index, k):
    """
    Bi-square weights of every regression point (rows) for a bandwidth of k neighbors.

    :param index: (NeighborIndex)
    :param k: (int) neighbor count
    :returns: (n, n) array
    """
    radii = index.radii(k)
    if not (radii > 0).all():
        i = int(np.argmin(radii))
        raise InfeasibleCandidateError(f'Bandwidth {k} gives a zero kernel radius at point {i} (duplicate coordinates).')
    ratio = index.distances / radii[:, None]
    w = (1.0 - ratio ** 2) ** 2
    w[ratio >= 1.0] = 0.0
    return w


def attribute_weight_matrix(x_j, w_geo, rho=RHO, ddof=0):
    """
    Attribute similarity rows for one covariate on the support of w_geo.

    :param x_j: (n,) covariate values
    :param w_geo: (n, n) geographic weights, row i for regression point i
    :returns: (n, n) array
    """
    x_j = np.asarray(x_j, dtype=float)
    mask = w_geo > 0
    sd = _neighborhood_sd(x_j, mask, ddof)
    sd = np.where(sd > 0, sd, rho)
    z = (x_j[None, :] - x_j[:, None]) / sd[:, None]
    return np.where(mask, 0.5 ** (z ** 2), 0.0)


def pooled_attribute_weight_matrix(X, w_geo, rho=RHO, ddof=0):
    """
    Single-score similarity over several covariates.

    Per covariate, |x_l - x_i| is standardized by the neighborhood standard
    deviation; the standardized distances are averaged over covariates and
    passed through the 0.5-base curve.

    :param X: (n, p) covariates, intercept excluded
    :param w_geo: (n, n) geographic weights
    :returns: (n, n) array
    """
    X = np.asarray(X, dtype=float)
    mask = w_geo > 0
    if X.ndim != 2 or X.shape[1] == 0:
        return np.where(mask, 1.0, 0.0)
    total = np.zeros_like(w_geo)
    for j in range(X.shape[1]):
        x = X[:, j]
        sd = _neighborhood_sd(x, mask, ddof)
        sd = np.where(sd > 0, sd, rho)
        total += np.abs(x[None, :] - x[:, None]) / sd[:, None]
    mean_distance = total / X.shape[1]
    return np.where(mask, 0.5 ** (mean_distance ** 2), 0.0)
