import hashlib

import numpy as np
import pandas as pd
import simplejson


def generate_hash(rows, add_constant_columns:dict=None):
    """
    Generates hash for provided rows.

    :param rows (pd.DataFrame, dict, list): Rows to hash. `type(rows)` must be able to instantiate a pandas dataframe.
    :param add_constant_columns (dict): Each key:value pair will be passed to the dataframe to be hashed as `df[k]=v`.

    :returns: md5 hash
    """
    df = pd.DataFrame(rows)
    if add_constant_columns is not None:
        assert isinstance(add_constant_columns, dict), 'arg add_constant_columns must be Python dictionary instance.'
        for k, v in add_constant_columns.items():
            df[k] = v
    # permutation invariant hashing
    df = df.sort_index(axis=1)
    df = df.sort_values(by=df.columns.tolist())
    encoded = simplejson.dumps(df.to_dict(orient='records'), ignore_nan=True).encode()
    dhash = hashlib.md5()
    dhash.update(encoded)
    return dhash.hexdigest()


def generate_run_id(data, settings:dict):
    """
    Fingerprints a dataset together with the settings of a run.

    :param data: (Dataset) coordinates, response and design matrix
    :param settings: (dict) JSON-serializable run settings
    :returns: md5 hash
    """
    frame = pd.DataFrame(np.column_stack([data.coords, data.y, data.X]))
    frame.columns = ['u', 'v', 'y'] + [f'x{j}' for j in range(data.m)]
    settings = dict(settings, variables=list(data.names))
    return generate_hash(frame, add_constant_columns={'settings': simplejson.dumps(settings, sort_keys=True)})
