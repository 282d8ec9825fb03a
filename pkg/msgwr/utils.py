"""General-purpose utilities"""

from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import InputError


def wrap(item):
    if not isinstance(item, list) and not isinstance(item, tuple):
        item = [item]
    return item


def split_names(text):
    """
    Splits a comma separated list of names, dropping blanks.

    :param text: (str, list or None) e.g. 'a, b,c'
    :returns: list of str
    """
    if text is None:
        return []
    names = []
    for item in wrap(text):
        names.extend(s.strip() for s in str(item).split(','))
    return [n for n in names if n]


def chunk_slices(n, n_chunks):
    """
    Splits range(n) into at most n_chunks contiguous slices, in index order.
    """
    n_chunks = max(1, min(int(n_chunks), n))
    bounds = np.linspace(0, n, n_chunks + 1).round().astype(int)
    return [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def parallel_map(func, items, threads=1):
    """
    Maps func over items with up to `threads` workers. Results keep the order of items.

    :param func: callable of one argument
    :param items: iterable
    :param threads: (int) worker cap; 1 runs serially in the calling thread
    :returns: list of results
    """
    items = list(items)
    if threads is None or threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(func, items))


def read_csv(path, **kwargs):
    """
    Reads a CSV with exact float parsing, so files written with 17 significant
    digits load back bit for bit.

    :param path: (str or Path) CSV file
    :param kwargs: passed to pd.read_csv
    :returns: pd.DataFrame
    """
    path = Path(path)
    if not path.exists():
        raise InputError(f'File not found: {path}')
    try:
        return pd.read_csv(path, float_precision='round_trip', **kwargs)
    except pd.errors.EmptyDataError:
        raise InputError(f'{path.name} is empty.') from None
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise InputError(f'{path.name} is not a readable CSV: {e}') from None
