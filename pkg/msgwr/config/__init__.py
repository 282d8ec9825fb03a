"""
Environment-driven settings for msgwr.
"""
import os
from enum import Enum

from ..errors import ParameterError


class DEFAULTS(Enum):
    MSGWR_LOGLEVEL = 'INFO'
    MSGWR_LOG_BASE_DIR = 'logs'

for default in DEFAULTS:
    if os.getenv(default.name) is None:
        os.environ[default.name] = default.value

config_mapping = {
    'loglevel': DEFAULTS.MSGWR_LOGLEVEL,
    'log_base_dir': DEFAULTS.MSGWR_LOG_BASE_DIR,
}

config = {k: os.getenv(v.name) for k, v in config_mapping.items()}

# read on demand, never defaulted
SEED_ENV = 'MSGWR_SEED'


def env_seed():
    """
    Seed set through MSGWR_SEED.

    :returns: int, or None when the variable is unset or empty
    """
    seed = os.getenv(SEED_ENV)
    if seed is None or not seed.strip():
        return None
    try:
        return int(seed)
    except ValueError:
        raise ParameterError(f'{SEED_ENV} must be an integer, got {seed!r}.') from None
