"""
msgwr fits local regressions whose per-covariate weights blend geographic
kernel proximity with attribute similarity, from OLS through GWR, SGWR and
MGWR to multiscale M-SGWR, together with simulation generators and diagnostics.
"""

__all__ = ['__version__', 'config', 'errors',
           'Dataset', 'ScaleConfig', 'FitOptions', 'FitResult',
           'fit_ols', 'fit_gwr', 'fit_sgwr', 'fit_msgwr', 'fit_model',
           'fit_metrics', 'morans_i',
           'gen_pure_geographic', 'gen_mixed_effects', 'score_recovery',
           'load_dataset', 'standardize', 'RunConfig',
           'SearchTrace', 'generate_hash', 'generate_run_id',
           'getLogger', 'LogFileManager']

from . import errors
from .config import config
from .diagnostics import fit_metrics, morans_i
from .estimators import FitOptions, FitResult, ScaleConfig, fit_gwr, fit_model, fit_msgwr, fit_ols, fit_sgwr
from .hash import generate_hash, generate_run_id
from .io import RunConfig, load_dataset, standardize
from .local_fit import Dataset
from .logging import LogFileManager, getLogger
from .model_selection import SearchTrace
from .simulation import gen_mixed_effects, gen_pure_geographic, score_recovery
from .version import __version__
