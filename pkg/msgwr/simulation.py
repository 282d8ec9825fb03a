"""
Synthetic datasets with known coefficient surfaces on a regular unit grid.

Two scenarios:
    pure-geo   every coefficient a smooth function of location
    mixed      intercept and x1 smooth; x2..x4 add a fragmented regime score
               c_j (k-means regimes on auxiliary features) to a smooth field g_j

One seeded numpy Generator drives every draw, so a seed fixes the dataset.
"""

from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy import stats
from sklearn.cluster import KMeans

from .enum import Scenario
from .errors import ParameterError
from .local_fit import Dataset
from .logging import getLogger
from .validation import validate_choice

logger = getLogger(__name__)

GRID_SIDE = 30
NOISE_SD = 0.9
N_BUMPS = 3
N_REGIMES = 4
# weights of (smooth field, regime score, noise) in each mixed-scenario predictor
MIXTURE = (0.5, 1.0, 0.5)


@dataclass
class SimulatedDataset:
    """
    :param dataset: Dataset
    :param true_beta: (n, m) true coefficients
    :param seed: (int) generator seed
    :param scenario: Scenario
    :param grid_side: (int) points per grid side, n = grid_side**2
    :param noise: (n,) error draws
    :param geographic: (n, m) smooth components g_j, zero where absent
    :param contextual: (n, m) regime components c_j, zero where absent
    """
    dataset: Dataset
    true_beta: np.ndarray
    seed: int
    scenario: Scenario
    grid_side: int
    noise: np.ndarray
    geographic: np.ndarray
    contextual: np.ndarray

    def response(self):
        """
        Response rebuilt from the true coefficients, the design matrix and the stored noise.
        """
        return (self.true_beta * self.dataset.X).sum(axis=1) + self.noise

    def truth_frame(self):
        return pd.DataFrame(self.true_beta, columns=list(self.dataset.names))


@dataclass(frozen=True)
class RecoveryScore:
    """
    :param rmse: (m,) per-coefficient RMSE
    :param pearson: m correlations, None where a column is constant
    """
    rmse: np.ndarray
    pearson: tuple

    def to_frame(self, names=None):
        names = names if names is not None else [f'x{j}' for j in range(len(self.rmse))]
        return pd.DataFrame({'covariate': list(names), 'rmse': self.rmse, 'pearson': list(self.pearson)})


def unit_grid(grid_side):
    """
    :returns: (grid_side**2, 2) coordinates on [0, 1]^2, u varying fastest
    """
    if int(grid_side) != grid_side or grid_side < 5:
        raise ParameterError(f'grid_side must be an integer >= 5, got {grid_side}.')
    ticks = np.linspace(0.0, 1.0, int(grid_side))
    uu, vv = np.meshgrid(ticks, ticks)
    return np.column_stack([uu.ravel(), vv.ravel()])


def _zscore(values):
    return (values - values.mean()) / values.std()


def gaussian_bump_field(rng, coords, n_bumps=N_BUMPS):
    """
    Smooth surface: a sum of radial Gaussian bumps with random centers, widths
    and signed amplitudes, rescaled to zero mean and unit variance.
    """
    field = np.zeros(coords.shape[0])
    for _ in range(n_bumps):
        center = rng.uniform(0.0, 1.0, size=2)
        width = rng.uniform(0.15, 0.4)
        amplitude = rng.uniform(0.5, 1.5) * rng.choice([-1.0, 1.0])
        d2 = ((coords - center) ** 2).sum(axis=1)
        field += amplitude * np.exp(-d2 / (2.0 * width ** 2))
    return _zscore(field)


def regime_field(rng, coords, n_regimes=N_REGIMES):
    """
    Fragmented surface: k-means regimes on auxiliary features (one smooth, two
    noise), each regime assigned a random score, rescaled to unit variance.
    """
    n = coords.shape[0]
    features = np.column_stack([gaussian_bump_field(rng, coords), rng.normal(size=(n, 2))])
    random_state = int(rng.integers(2 ** 31 - 1))
    labels = KMeans(n_clusters=n_regimes, n_init=10, random_state=random_state).fit_predict(features)
    scores = rng.normal(size=n_regimes)
    return _zscore(scores[labels])


def _assemble(scenario, seed, grid_side, coords, predictors, true_beta, geographic, contextual, noise):
    n, p = predictors.shape
    X = np.column_stack([np.ones(n), predictors])
    y = (true_beta * X).sum(axis=1) + noise
    names = ('Intercept', *[f'x{j}' for j in range(1, p + 1)])
    dataset = Dataset(coords=coords, y=y, X=X, names=names)
    logger.info(f'Simulated {scenario.value} dataset: n={n}, m={p + 1}, seed={seed}.')
    return SimulatedDataset(
        dataset=dataset,
        true_beta=true_beta,
        seed=seed,
        scenario=scenario,
        grid_side=int(grid_side),
        noise=noise,
        geographic=geographic,
        contextual=contextual,
    )


def gen_pure_geographic(seed, grid_side=GRID_SIDE, noise_sd=NOISE_SD):
    """
    Three coefficients driven by location alone:
        beta0 = 1 + 0.8 g0,  beta1 = 1 + g1,  beta2 = 1 + (u + (2 + v))

    Predictors are smooth fields plus independent standard normal noise.

    :param seed: (int)
    :param grid_side: (int) >= 5
    :param noise_sd: (float) standard deviation of the error, 0 for noise-free data
    :returns: SimulatedDataset
    """
    coords = unit_grid(grid_side)
    n = coords.shape[0]
    rng = np.random.default_rng(seed)
    u, v = coords[:, 0], coords[:, 1]
    g0 = gaussian_bump_field(rng, coords)
    g1 = gaussian_bump_field(rng, coords)
    geographic = np.column_stack([g0, g1, u + (2.0 + v)])
    true_beta = np.column_stack([1.0 + 0.8 * g0, 1.0 + g1, 1.0 + (u + (2.0 + v))])
    predictors = np.column_stack([gaussian_bump_field(rng, coords) + rng.normal(size=n) for _ in range(2)])
    noise = rng.normal(0.0, noise_sd, size=n) if noise_sd > 0 else np.zeros(n)
    return _assemble(Scenario.PURE_GEO, seed, grid_side, coords, predictors, true_beta, geographic, np.zeros_like(geographic), noise)


def gen_mixed_effects(seed, grid_side=GRID_SIDE, noise_sd=NOISE_SD, s=(1.0, 1.0, 1.0), mixture=MIXTURE):
    """
    Five coefficients:
        beta0 = 1 + 0.8 g0,  beta1 = 1 + g1,  beta_j = 1 + s_j (g_j + c_j) for j = 2, 3, 4

    Predictor x_j mixes a smooth field, the regime score c_j (j >= 2) and
    noise with the weights in `mixture`.

    :param s: three scale factors s_2..s_4
    :param mixture: (smooth, regime, noise) weights
    :returns: SimulatedDataset
    """
    if len(s) != 3:
        raise ParameterError(f's needs 3 values (one per contextual coefficient), got {len(s)}.')
    if len(mixture) != 3:
        raise ParameterError(f'mixture needs 3 weights (smooth, regime, noise), got {len(mixture)}.')
    coords = unit_grid(grid_side)
    n = coords.shape[0]
    m = 5
    rng = np.random.default_rng(seed)
    geographic = np.column_stack([gaussian_bump_field(rng, coords) for _ in range(m)])
    contextual = np.zeros((n, m))
    for j in range(2, m):
        contextual[:, j] = regime_field(rng, coords)
    true_beta = np.empty((n, m))
    true_beta[:, 0] = 1.0 + 0.8 * geographic[:, 0]
    true_beta[:, 1] = 1.0 + geographic[:, 1]
    for j in range(2, m):
        true_beta[:, j] = 1.0 + s[j - 2] * (geographic[:, j] + contextual[:, j])
    w_smooth, w_regime, w_noise = mixture
    predictors = np.column_stack([
        w_smooth * gaussian_bump_field(rng, coords) + w_regime * contextual[:, j] + w_noise * rng.normal(size=n)
        for j in range(1, m)
    ])
    noise = rng.normal(0.0, noise_sd, size=n) if noise_sd > 0 else np.zeros(n)
    return _assemble(Scenario.MIXED, seed, grid_side, coords, predictors, true_beta, geographic, contextual, noise)


def simulate(scenario, seed, grid_side=GRID_SIDE, **kwargs):
    scenario = validate_choice(scenario, Scenario, 'scenario')
    if scenario is Scenario.PURE_GEO:
        return gen_pure_geographic(seed, grid_side=grid_side, **kwargs)
    return gen_mixed_effects(seed, grid_side=grid_side, **kwargs)


def score_recovery(true_beta, estimated_beta):
    """
    Per-coefficient RMSE and Pearson correlation between true and estimated surfaces.

    :returns: RecoveryScore
    """
    true_beta = np.asarray(true_beta, dtype=float)
    estimated_beta = np.asarray(estimated_beta, dtype=float)
    if true_beta.shape != estimated_beta.shape:
        raise ParameterError(f'Shapes differ: {true_beta.shape} vs {estimated_beta.shape}.')
    rmse = np.sqrt(np.mean((estimated_beta - true_beta) ** 2, axis=0))
    pearson = []
    for j in range(true_beta.shape[1]):
        a, b = true_beta[:, j], estimated_beta[:, j]
        if np.ptp(a) == 0 or np.ptp(b) == 0:
            pearson.append(None)
        else:
            pearson.append(float(stats.pearsonr(a, b)[0]))
    return RecoveryScore(rmse=rmse, pearson=tuple(pearson))
