"""
Coordinates, Euclidean distances and adaptive-bandwidth neighbor selection.

Coordinates are an (n, 2) float array of projected (u, v) positions. Adaptive
bandwidths are integer neighbor counts: the kernel radius at point i is the
distance to its k-th nearest other observation.
"""

import numpy as np
from scipy.spatial.distance import cdist

from .errors import InputError, ParameterError
from .logging import getLogger
from .validation import validate_finite

logger = getLogger(__name__)

# k = n has no n-th other neighbor; the radius is stretched past the farthest point instead
BANDWIDTH_EPS = 1.0000001


def as_coordinates(coords):
    """
    Validates coordinates.

    :param coords: array-like of shape (n, 2)
    :returns: (n, 2) float array
    """
    coords = np.asarray(coords, dtype=float)
    if coords.ndim != 2 or coords.shape[1] != 2:
        raise InputError(f'Coordinates must have shape (n, 2), got {coords.shape}.')
    if coords.shape[0] < 2:
        raise InputError('At least 2 locations are required.')
    return validate_finite(coords, 'coordinates')


def duplicate_coordinates(coords):
    """
    Returns the indices of observations whose location repeats an earlier one.
    """
    coords = np.asarray(coords, dtype=float)
    _, first = np.unique(coords, axis=0, return_index=True)
    return np.setdiff1d(np.arange(len(coords)), first)


def pairwise_distances(coords):
    """
    Euclidean distance table.

    :param coords: (n, 2) coordinates
    :returns: (n, n) symmetric matrix with a zero diagonal
    """
    coords = as_coordinates(coords)
    return cdist(coords, coords, metric='euclidean')


def adaptive_bandwidth_distance(row, k, point_index):
    """
    Kernel radius for an adaptive bandwidth of k neighbors.

    :param row: (n,) distances from point_index to every observation
    :param k: (int) neighbor count, 2 <= k <= n
    :param point_index: (int) position of the regression point in row
    :returns: (float) k-th smallest distance to the other n-1 observations
    """
    row = np.asarray(row, dtype=float)
    n = row.shape[0]
    if int(k) != k or not (2 <= k <= n):
        raise ParameterError(f'Neighbor count must be an integer in [2, {n}], got {k}.')
    others = np.sort(np.delete(row, point_index))
    k = int(k)
    if k == n:
        return float(others[-1] * BANDWIDTH_EPS)
    return float(others[k - 1])


class NeighborIndex:
    """
    Distance table with each row's neighbor distances pre-sorted, so the
    radius vector for any bandwidth is a column lookup.
    """

    def __init__(self, coords):
        self.coords = as_coordinates(coords)
        self.distances = pairwise_distances(self.coords)
        self.n = self.distances.shape[0]
        masked = self.distances.copy()
        np.fill_diagonal(masked, np.inf)
        # last column is the self entry (inf) and is never read
        self._sorted = np.sort(masked, axis=1)
        duplicates = duplicate_coordinates(self.coords)
        if len(duplicates):
            logger.warning(f'{len(duplicates)} observation(s) share coordinates with another observation.')

    def __repr__(self):
        return f'NeighborIndex(n={self.n})'

    def radii(self, k):
        """
        Kernel radius at every point for a bandwidth of k neighbors.

        :param k: (int) 2 <= k <= n
        :returns: (n,) array
        """
        if int(k) != k or not (2 <= k <= self.n):
            raise ParameterError(f'Neighbor count must be an integer in [2, {self.n}], got {k}.')
        k = int(k)
        if k == self.n:
            return self._sorted[:, self.n - 2] * BANDWIDTH_EPS
        return self._sorted[:, k - 1].copy()
