"""
Goodness-of-fit metrics and residual spatial autocorrelation.
"""

import math
from dataclasses import asdict, dataclass

import numpy as np
from esda.moran import Moran
from libpysal.weights import KNN

from .errors import InfeasibleCandidateError, NumericError, ParameterError
from .geometry import as_coordinates
from .logging import getLogger
from .model_selection import aicc, cv_score

logger = getLogger(__name__)

MORAN_K = 8
MORAN_PERMUTATIONS = 999


@dataclass(frozen=True)
class MetricBundle:
    """
    :param adj_r2: adjusted R2, the effective number of parameters as parameter count
    :param aicc: AICc at the model's effective number of parameters, nan when undefined
    :param rss: residual sum of squares
    :param mae: mean absolute error
    :param rmse: root mean squared error
    :param r2: coefficient of determination
    :param cv: leave-one-out CV score, nan unless leverages were supplied
    """
    adj_r2: float
    aicc: float
    rss: float
    mae: float
    rmse: float
    r2: float
    cv: float = float('nan')

    def to_dict(self):
        return asdict(self)


def fit_metrics(y, fitted, enp_model, leverage=None):
    """
    :param y: (n,) observed response
    :param fitted: (n,) fitted values
    :param enp_model: (float) effective number of parameters, trace of the hat matrix
    :param leverage: (n,) optional hat diagonal, enables the CV score
    :returns: MetricBundle
    """
    y = np.asarray(y, dtype=float)
    fitted = np.asarray(fitted, dtype=float)
    n = y.shape[0]
    if not n > enp_model + 1:
        raise ParameterError(f'Adjusted R2 needs n > ENP + 1, got n={n}, ENP={enp_model:.6g}.')
    e = y - fitted
    rss = float(e @ e)
    tss = float(np.sum((y - y.mean()) ** 2))
    if not tss > 0:
        raise NumericError('R2 undefined: the response has zero total sum of squares.')
    r2 = 1.0 - rss / tss
    adj_r2 = 1.0 - (1.0 - r2) * (n - 1) / (n - enp_model - 1)
    try:
        aicc_value = aicc(n, rss / n, enp_model)
    except (InfeasibleCandidateError, NumericError):
        aicc_value = float('nan')
    cv = float('nan')
    if leverage is not None:
        try:
            cv = cv_score(e, leverage)
        except InfeasibleCandidateError:
            pass
    return MetricBundle(
        adj_r2=adj_r2,
        aicc=aicc_value,
        rss=rss,
        mae=float(np.mean(np.abs(e))),
        rmse=math.sqrt(rss / n),
        r2=r2,
        cv=cv,
    )


@dataclass(frozen=True)
class MoranResult:
    I: float
    expected: float
    variance: float
    z: float
    p_value: float
    k: int
    permutations: int = 0
    p_permutation: float = None

    def to_dict(self):
        return asdict(self)


def knn_weights(coords, k=MORAN_K):
    """
    Row-standardized binary k-nearest-neighbor weights.

    :returns: libpysal.weights.W, each row holding k entries of 1/k
    """
    coords = as_coordinates(coords)
    n = coords.shape[0]
    if not (1 <= k <= n - 1):
        raise ParameterError(f'k must be within [1, {n - 1}], got {k}.')
    w = KNN.from_array(coords, k=int(k))
    w.transform = 'r'
    return w


def _seeded_moran(e, w, permutations, seed):
    # esda draws its relabelings from the global numpy stream
    state = np.random.get_state()
    try:
        np.random.seed(seed)
        return Moran(e, w, transformation='r', permutations=permutations, two_tailed=True)
    finally:
        np.random.set_state(state)


def morans_i(residuals, coords, k=MORAN_K, permutations=0, seed=None):
    """
    Global Moran's I of model residuals.

    Inference under the normality assumption; with permutations > 0 a
    folded pseudo p-value from seeded random relabelings is added.

    :param residuals: (n,) residuals
    :param coords: (n, 2) coordinates
    :param k: (int) neighbors in the weight matrix
    :param permutations: (int) relabelings for the pseudo p-value, 0 to skip
    :param seed: (int) seed of the permutation stream
    :returns: MoranResult
    """
    e = np.asarray(residuals, dtype=float)
    n = e.shape[0]
    if n < 3:
        raise ParameterError(f"Moran's I needs at least 3 observations, got {n}.")
    if not np.any(e != e[0]):
        raise NumericError("Moran's I undefined for constant residuals.")
    coords = as_coordinates(coords)
    if coords.shape[0] != n:
        raise ParameterError(f'{n} residuals for {coords.shape[0]} locations.')

    moran = _seeded_moran(e, knn_weights(coords, k), int(permutations), seed)
    p_permutation = float(moran.p_sim) if permutations else None
    logger.debug(f"Moran's I = {moran.I:.6g} (z = {moran.z_norm:.4g}, p = {moran.p_norm:.4g}).")
    return MoranResult(
        I=float(moran.I),
        expected=float(moran.EI),
        variance=float(moran.VI_norm),
        z=float(moran.z_norm),
        p_value=float(moran.p_norm),
        k=int(k),
        permutations=int(permutations),
        p_permutation=p_permutation,
    )
