"""riskpipe: a credit-risk scorecard pipeline.

Cleansing of coded bureau sentinels, median / good-rate-bin imputation,
IV-optimal WoE binning, variable clustering with PoV and VIF selection,
class rebalancing, logistic regression and gradient-boosted trees, and a
declarative experiment grid with comparison tables and gain/lift charts.
"""
from .errors import ConfigError, DataError, EmptySelectionError, PipelineError, RiskpipeError
from .kernels import BACKEND
from .table import Column, ColumnKind, ModelKind, Table, TargetSpec, load_csv, load_table, save_table

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Column",
    "ColumnKind",
    "ConfigError",
    "DataError",
    "EmptySelectionError",
    "ModelKind",
    "PipelineError",
    "RiskpipeError",
    "Table",
    "TargetSpec",
    "load_csv",
    "load_table",
    "save_table",
    "__version__",
]
