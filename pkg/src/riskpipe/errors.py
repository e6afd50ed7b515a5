"""Exception hierarchy shared across the pipeline.

Exit-code mapping for the CLI lives in cli.py: ConfigError -> 1,
DataError -> 2.
"""


class RiskpipeError(Exception):
    pass


class ConfigError(RiskpipeError):
    """Bad configuration value (threshold out of range, unknown key, ...)."""


class DataError(RiskpipeError):
    """Malformed input data or a violated data contract."""


class PipelineError(RiskpipeError):
    """A pipeline stage could not proceed on otherwise valid data."""


class EmptySelectionError(PipelineError):
    """No variable survived a selection filter; carries the evidence table."""

    def __init__(self, message, iv_table=None):
        super().__init__(message)
        self.iv_table = dict(iv_table or {})
