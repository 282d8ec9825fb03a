"""
Enum classes.
"""

from enum import Enum


class Model(Enum):
    OLS = 'ols'
    GWR = 'gwr'
    SGWR = 'sgwr'
    MGWR = 'mgwr'
    MSGWR = 'msgwr'


class Criterion(Enum):
    AICC = 'aicc'
    CV = 'cv'


class AlphaSearch(Enum):
    DNC = 'dnc'
    GREEDY = 'greedy'


class Kernel(Enum):
    ADAPTIVE_BISQUARE = 'adaptive-bisquare'


class SOCKind(Enum):
    COEF = 'coef'
    RSS = 'rss'


class Scenario(Enum):
    MIXED = 'mixed'
    PURE_GEO = 'pure-geo'


class Standardize(Enum):
    AUTO = 'auto'
    ON = 'on'
    OFF = 'off'
