from mrstab.common.profiles import fraction_str

from abc import ABC, abstractmethod
from fractions import Fraction
import time

import numpy as np
import pandas as pd

PROFILE_COLUMNS = ['quantity', 'param_1', 'param_2', 'value', 'witness_id']
PLOT_COLUMNS = ['quantity', 'x', 'y', 'series']


class Deadline:
    ''' Wall-clock budget handed to estimators; None means unlimited '''
    def __init__(self, seconds=None):
        self.seconds = seconds
        self.expires = None if seconds is None else time.monotonic() + seconds

    def expired(self):
        return self.expires is not None and time.monotonic() > self.expires

    def remaining(self):
        return None if self.expires is None else max(0.0, self.expires - time.monotonic())

    @classmethod
    def coerce(cls, deadline):
        if isinstance(deadline, Deadline):
            return deadline
        return cls(deadline)


def format_value(x):
    ''' Table cell text: exact rationals stay exact, floats are rounded so runs compare byte for byte '''
    if x is None:
        return ''
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, Fraction):
        return fraction_str(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f'{float(x):.6g}'
    return str(x)


class Profile(ABC):
    """
    Base class for sampled quantities (recurrence, stability, contraction, distortion, ...).
    Subclasses turn their samples into table rows; every sampled value that has a witness (a path or vertex
    sequence) stores it so the value can be replayed.
    :param name: prefix for witness ids
    :param complete: False when a deadline cut the sweep short
    """
    def __init__(self, name, complete=True):
        self.name = name
        self.complete = complete
        self.witnesses = {}

    def add_witness(self, verts):
        if verts is None:
            return None
        witness_id = f'{self.name}:{len(self.witnesses)}'
        self.witnesses[witness_id] = [int(v) for v in verts]
        return witness_id

    @abstractmethod
    def rows(self):
        ''' List of dicts keyed by PROFILE_COLUMNS '''
        pass

    def verdicts(self):
        return {}

    def to_frame(self):
        rows = [{k: format_value(row.get(k)) for k in PROFILE_COLUMNS} for row in self.rows()]
        return pd.DataFrame(rows, columns=PROFILE_COLUMNS)

    def plot_frame(self):
        ''' Long format: one series per (quantity, param_2) '''
        records = []
        for row in self.rows():
            series = row['quantity'] if row.get('param_2') in (None, '') else \
                f"{row['quantity']}[{format_value(row['param_2'])}]"
            records.append({'quantity': row['quantity'], 'x': format_value(row['param_1']),
                            'y': format_value(row['value']), 'series': series})
        return pd.DataFrame(records, columns=PLOT_COLUMNS)
