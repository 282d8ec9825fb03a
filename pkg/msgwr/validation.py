"""
Tools to validate user input.
"""

import numpy as np

from .errors import InputError, ParameterError


def validate_finite(values, name, error=InputError):
    """
    Checks that every entry of values is finite.

    :param values: array-like, 1-D or 2-D (rows are observations)
    :param name: (str) name used in the error message
    :param error: error to throw upon validation failure
    :returns: values as a float numpy array
    """
    values = np.asarray(values, dtype=float)
    bad = ~np.isfinite(values)
    if bad.any():
        idx = np.argwhere(bad)[0]
        row = int(idx[0])
        column = int(idx[1]) if values.ndim > 1 else None
        msg = f'{name} has a non-finite value at ' + (f'row {row}' if column is None else f'row {row}, column {column}') + '.'
        if issubclass(error, InputError):
            raise error(msg, row=row, column=column)
        raise error(msg)
    return values


def validate_unit_interval(value, name):
    if not (0.0 <= value <= 1.0):
        raise ParameterError(f'{name} must be within [0, 1], got {value}.')
    return float(value)


def validate_neighbor_count(k, k_min, k_max, name='bandwidth'):
    if int(k) != k:
        raise ParameterError(f'{name} must be an integer neighbor count, got {k}.')
    if not (k_min <= k <= k_max):
        raise ParameterError(f'{name} must be within [{k_min}, {k_max}], got {k}.')
    return int(k)


def validate_choice(value, enum_cls, name):
    """
    Coerces value to a member of enum_cls, accepting members or their values.
    """
    if isinstance(value, enum_cls):
        return value
    try:
        return enum_cls(value)
    except ValueError:
        options = ', '.join(repr(m.value) for m in enum_cls)
        raise ParameterError(f'{name} must be one of {options}, got {value!r}.') from None
