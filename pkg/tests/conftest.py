import numpy as np
import pytest

from riskpipe.table import Column, ColumnKind, Table


def make_column(name, values, kind=ColumnKind.RAW):
    """Column from a list where None marks a missing cell."""
    vals = np.array([np.nan if v is None else float(v) for v in values])
    missing = np.array([v is None for v in values])
    return Column(name, vals, missing, kind)


def make_table(**cols):
    columns = []
    n = None
    for name, values in cols.items():
        kind = ColumnKind.TARGET if name == "target" else ColumnKind.RAW
        c = make_column(name, values, kind)
        columns.append(c)
        n = len(c)
    return Table(tuple(columns), n, ("fixture",))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
