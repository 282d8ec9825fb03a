"""
Dataset ingestion, standardization, run configuration and result files.

Every float written to CSV uses 17 significant digits so files re-load
losslessly. Result files carry no timestamps; identical runs give identical bytes.
"""

from dataclasses import asdict, dataclass, fields, replace
from enum import Enum
from pathlib import Path

import envyaml
import numpy as np
import pandas as pd
import simplejson
from sklearn.preprocessing import StandardScaler

from .config import env_seed
from .diagnostics import MORAN_K
from .enum import AlphaSearch, Criterion, Kernel, Model, SOCKind, Standardize
from .errors import InputError, ParameterError
from .estimators import MAX_ITERS, PHI, FitOptions
from .geometry import duplicate_coordinates
from .local_fit import Dataset
from .logging import getLogger
from .model_selection import DNC_EPSILON, GREEDY_REFINE_STEP, GREEDY_SEEDS, GREEDY_STEP
from .utils import read_csv, split_names
from .validation import validate_choice
from .weights import RHO

logger = getLogger(__name__)

FLOAT_FORMAT = '%.17g'
LONLAT_NAMES = {'lon', 'long', 'lng', 'longitude', 'lat', 'latitude'}
DISPLAY_DIGITS = 4
RUN_KEY = 'run'


@dataclass(frozen=True)
class ColumnSpec:
    """
    Column mapping of an input CSV.

    :param predictors: predictor columns; None takes every remaining column
    """
    x_col: str = 'u'
    y_col: str = 'v'
    response: str = 'y'
    predictors: tuple = None


def output_path(out_dir, stem, kind, suffix='.csv'):
    """
    :returns: Path '<out_dir>/<stem>.<kind><suffix>', e.g. run.coefficients.csv
    """
    return Path(out_dir).joinpath(f'{stem}.{kind}{suffix}')


def truth_path(path):
    """
    Sidecar of true coefficients next to a dataset CSV: data.csv -> data.truth.csv
    """
    return Path(path).with_suffix('.truth.csv')


def _numeric_frame(df, columns):
    values = df[columns].apply(pd.to_numeric, errors='coerce')
    bad = values.isna() | ~np.isfinite(values.to_numpy(dtype=float))
    if bad.to_numpy().any():
        row, col = np.argwhere(bad.to_numpy())[0]
        raw = df[columns].iloc[row, col]
        raise InputError(f'Invalid value {raw!r} in column {columns[col]!r} at data row {row + 1}.', row=int(row), column=columns[col])
    return values.to_numpy(dtype=float)


def load_dataset(path, spec=None):
    """
    Reads a CSV with a header row into a Dataset, prepending the intercept.

    :param path: (str or Path) CSV file
    :param spec: ColumnSpec
    :returns: Dataset
    """
    spec = spec if spec is not None else ColumnSpec()
    path = Path(path)
    if not path.exists():
        raise InputError(f'Input file not found: {path}')
    df = read_csv(path)
    required = [spec.x_col, spec.y_col, spec.response]
    predictors = list(spec.predictors) if spec.predictors else [c for c in df.columns if c not in required]
    missing = [c for c in required + predictors if c not in df.columns]
    if missing:
        raise InputError(f'Missing column(s) in {path.name}: {", ".join(missing)}.')
    if not predictors:
        raise InputError(f'{path.name} has no predictor columns.')
    if {spec.x_col.lower(), spec.y_col.lower()} & LONLAT_NAMES:
        logger.warning('Coordinates look like longitude/latitude; distances are computed as planar Euclidean.')

    coords = _numeric_frame(df, [spec.x_col, spec.y_col])
    y = _numeric_frame(df, [spec.response])[:, 0]
    X = _numeric_frame(df, predictors)
    duplicates = duplicate_coordinates(coords)
    if len(duplicates):
        logger.warning(f'{len(duplicates)} row(s) of {path.name} repeat an earlier location, first at data row {int(duplicates[0]) + 1}.')
    data = Dataset.from_arrays(coords, y, X, predictors)
    logger.info(f'Loaded {path.name}: n={data.n}, variables {list(data.names)}.')
    return data


def write_dataset(data, path, spec=None):
    """
    Writes a Dataset as CSV (coordinates, response, predictors).
    """
    spec = spec if spec is not None else ColumnSpec()
    frame = pd.DataFrame({spec.x_col: data.coords[:, 0], spec.y_col: data.coords[:, 1], spec.response: data.y})
    for j, name in enumerate(data.names[1:], start=1):
        frame[name] = data.X[:, j]
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return Path(path)


def write_simulated(sim, path, spec=None):
    """
    Writes a simulated dataset and its true coefficients sidecar.

    :returns: (dataset path, sidecar path)
    """
    path = write_dataset(sim.dataset, path, spec)
    sidecar = truth_path(path)
    sim.truth_frame().to_csv(sidecar, index=False, float_format=FLOAT_FORMAT)
    return path, sidecar


def load_truth(path, data):
    """
    True coefficients from the sidecar of a dataset CSV.

    :returns: (n, m) array, or None when there is no sidecar
    """
    sidecar = truth_path(path)
    if not sidecar.exists():
        return None
    frame = read_csv(sidecar)
    missing = [n for n in data.names if n not in frame.columns]
    if missing or len(frame) != data.n:
        raise InputError(f'{sidecar.name} does not match the dataset (missing {missing}, {len(frame)} rows for {data.n}).')
    return frame[list(data.names)].to_numpy(dtype=float)


@dataclass(frozen=True)
class Standardization:
    """
    z-score parameters of the predictors (intercept excluded) and the response.
    """
    x_mean: np.ndarray
    x_scale: np.ndarray
    y_mean: float
    y_scale: float

    def unstandardize(self, data):
        """
        Inverse transform of a standardized Dataset.
        """
        X = data.X.copy()
        X[:, 1:] = X[:, 1:] * self.x_scale + self.x_mean
        return data.replace(y=data.y * self.y_scale + self.y_mean, X=X)

    def back_transform(self, beta):
        """
        Coefficients on the original scales of the response and predictors.

        :param beta: (n, m) coefficients fit on standardized data
        """
        beta = np.asarray(beta, dtype=float)
        out = np.empty_like(beta)
        out[:, 1:] = beta[:, 1:] * self.y_scale / self.x_scale
        out[:, 0] = self.y_scale * beta[:, 0] + self.y_mean - out[:, 1:] @ self.x_mean
        return out

    def to_dict(self, names):
        return {
            'response': {'mean': self.y_mean, 'sd': self.y_scale},
            'predictors': {n: {'mean': float(mu), 'sd': float(sd)} for n, mu, sd in zip(names[1:], self.x_mean, self.x_scale)},
        }


def standardize(data):
    """
    z-scores every predictor and the response (population standard deviation).

    :returns: (standardized Dataset, Standardization)
    """
    x_scaler = StandardScaler().fit(data.X[:, 1:])
    y_scaler = StandardScaler().fit(data.y[:, None])
    constant = [data.names[j + 1] for j, var in enumerate(x_scaler.var_) if not var > 0]
    if not y_scaler.var_[0] > 0:
        constant.insert(0, 'response')
    if constant:
        raise InputError(f'Zero-variance column(s) cannot be standardized: {", ".join(constant)}.')
    X = data.X.copy()
    X[:, 1:] = x_scaler.transform(data.X[:, 1:])
    y = y_scaler.transform(data.y[:, None])[:, 0]
    record = Standardization(
        x_mean=x_scaler.mean_,
        x_scale=x_scaler.scale_,
        y_mean=float(y_scaler.mean_[0]),
        y_scale=float(y_scaler.scale_[0]),
    )
    return data.replace(y=y, X=X), record


@dataclass(frozen=True)
class RunConfig:
    """
    Settings of one CLI run. Every field has a default; YAML files may set any subset.
    """
    model: Model = Model.MSGWR
    criterion: Criterion = Criterion.AICC
    alpha_search: AlphaSearch = AlphaSearch.DNC
    kernel: Kernel = Kernel.ADAPTIVE_BISQUARE
    phi: float = PHI
    soc: SOCKind = SOCKind.COEF
    max_iters: int = MAX_ITERS
    standardize: Standardize = Standardize.AUTO
    seed: int = 0
    moran_k: int = MORAN_K
    moran_permutations: int = 0
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
    x_col: str = 'u'
    y_col: str = 'v'
    response: str = 'y'
    predictors: tuple = None
    data: str = None
    out_dir: str = None
    stem: str = None

    _enums = {'model': Model, 'criterion': Criterion, 'alpha_search': AlphaSearch, 'kernel': Kernel, 'soc': SOCKind, 'standardize': Standardize}

    def __post_init__(self):
        for name, enum_cls in self._enums.items():
            object.__setattr__(self, name, validate_choice(getattr(self, name), enum_cls, name))
        object.__setattr__(self, 'greedy_seeds', tuple(float(s) for s in self.greedy_seeds))
        if self.predictors is not None:
            object.__setattr__(self, 'predictors', tuple(split_names(self.predictors)))
        if int(self.moran_k) < 1:
            raise ParameterError(f'moran_k must be at least 1, got {self.moran_k}.')

    @classmethod
    def keys(cls):
        return [f.name for f in fields(cls)]

    @classmethod
    def from_dict(cls, d):
        unknown = sorted(set(d) - set(cls.keys()))
        if unknown:
            raise ParameterError(f'Unknown configuration key(s): {", ".join(unknown)}.')
        return cls(**d)

    @classmethod
    def from_yaml(cls, path):
        """
        Loads the `run` block of a YAML file. ${VAR} references are resolved from
        the environment; MSGWR_SEED, when set, overrides the seed.
        """
        path = Path(path)
        if not path.exists():
            raise InputError(f'Configuration file not found: {path}')
        d = envyaml.EnvYAML(path, flatten=False).export().get(RUN_KEY) or {}
        return cls.from_dict(d).with_env()

    def with_env(self):
        seed = env_seed()
        return self if seed is None else replace(self, seed=seed)

    def with_overrides(self, **kwargs):
        """
        Replaces the fields given with a value other than None.
        """
        kwargs = {k: v for k, v in kwargs.items() if v is not None}
        unknown = sorted(set(kwargs) - set(self.keys()))
        if unknown:
            raise ParameterError(f'Unknown configuration key(s): {", ".join(unknown)}.')
        return replace(self, **kwargs)

    def column_spec(self):
        return ColumnSpec(x_col=self.x_col, y_col=self.y_col, response=self.response, predictors=self.predictors)

    def fit_options(self):
        return FitOptions(
            criterion=self.criterion,
            alpha_search=self.alpha_search,
            epsilon=self.epsilon,
            greedy_seeds=self.greedy_seeds,
            greedy_step=self.greedy_step,
            greedy_refine_step=self.greedy_refine_step,
            rho=self.rho,
            ddof=self.ddof,
            ridge=self.ridge,
            threads=self.threads,
            bw_min=self.bw_min,
            bw_max=self.bw_max,
        )

    def to_dict(self):
        """
        JSON-ready settings; paths and the thread cap are left out as they do not change results.
        """
        d = {k: (v.value if isinstance(v, Enum) else v) for k, v in asdict(self).items()}
        for k in ('data', 'out_dir', 'stem', 'threads'):
            d.pop(k)
        d['greedy_seeds'] = list(d['greedy_seeds'])
        if d['predictors'] is not None:
            d['predictors'] = list(d['predictors'])
        return d


def coefficients_frame(result, data):
    """
    One row per observation: id, u, v, fitted, residual, then beta/se/t per covariate.
    """
    frame = pd.DataFrame({
        'id': np.arange(data.n),
        'u': data.coords[:, 0],
        'v': data.coords[:, 1],
        'fitted': result.fitted,
        'residual': result.residuals,
    })
    for j, name in enumerate(result.names):
        frame[f'beta_{name}'] = result.beta[:, j]
        frame[f'se_{name}'] = result.se[:, j]
        frame[f't_{name}'] = result.t_values[:, j]
    return frame


def write_coefficients(result, data, path):
    coefficients_frame(result, data).to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return Path(path)


def _round(value):
    if isinstance(value, dict):
        return {k: _round(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_round(v) for v in value]
    if isinstance(value, float):
        return round(value, DISPLAY_DIGITS)
    return value


def summary_dict(result, run_id, settings, standardization=None, moran=None, recovery=None):
    """
    JSON-ready summary of a fit. Full precision throughout, except the 'display' block.
    """
    names = list(result.names)
    scales = None
    if result.scales is not None:
        scales = {
            'bandwidth': dict(zip(names, result.scales.bandwidths)),
            'alpha': dict(zip(names, result.scales.alphas)),
        }
    criterion = result.criterion
    summary = {
        'run_id': run_id,
        'model': result.model.value,
        'n': int(result.n),
        'variables': names,
        'criterion': {
            'kind': criterion.kind.value,
            'value': criterion.value,
            'trace_S': criterion.trace_S,
            'feasible': criterion.feasible,
        },
        'scales': scales,
        'enp': {
            'model': float(result.enp_model),
            'per_covariate': dict(zip(names, map(float, result.enp_per_covariate))),
        },
        'sigma2_hat': float(result.sigma2_hat),
        'diagnostics': result.diagnostics.to_dict(),
        'convergence': {
            'converged': bool(result.converged),
            'iterations': int(result.iterations),
            'soc_history': [float(s) for s in result.soc_history],
        },
        'ridge_points': [int(i) for i in result.ridge_points],
        'coefficients': result.coefficient_summary().to_dict(orient='records'),
        'settings': settings,
        'standardization': standardization.to_dict(result.names) if standardization is not None else None,
        'moran': moran.to_dict() if moran is not None else None,
        'recovery': recovery.to_frame(names).to_dict(orient='records') if recovery is not None else None,
    }
    summary['display'] = _round({
        'criterion': summary['criterion']['value'],
        'scales': scales,
        'enp': summary['enp'],
        'diagnostics': summary['diagnostics'],
    })
    return summary


def write_summary(summary, path):
    with open(path, 'w') as f:
        simplejson.dump(summary, f, ignore_nan=True, indent=2, default=_json_default)
    return Path(path)


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Enum):
        return obj.value
    raise TypeError(f'{type(obj).__name__} is not JSON serializable')


def write_frame(frame, path):
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return Path(path)
