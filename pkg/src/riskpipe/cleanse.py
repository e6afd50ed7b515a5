"""Coded-sentinel detection, recoding to missing, and uninformative-column drops.

Bureau extracts flag special conditions with integer sentinels (96, 9444,
9999998, ...) instead of a proper missing marker. The default detector is
the fixed 17-value list observed in this data family; the textual
"starts with 9, ends 4-9, two or more digits" rule is available via
CodedValueRule(pattern="starts_with_9_ends_4_to_9").
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError
from .table import Column, ColumnKind, Table

TABLE_CODES = frozenset(
    {
        96, 97, 98, 99,
        9444, 9996, 9997, 9998, 9999,
        99994, 99996, 99997, 99998, 99999,
        9999996, 9999997, 9999998,
    }
)

PATTERN_RULE = "starts_with_9_ends_4_to_9"
LIST_RULE = "explicit_list"

# a cell counts as an integer code only when it is integral to this tolerance
_INTEGRAL_TOL = 1e-9


@dataclass(frozen=True)
class CodedValueRule:
    pattern: str = LIST_RULE
    explicit_values: frozenset = TABLE_CODES
    min_digits: int = 2

    def __post_init__(self):
        if self.pattern not in (LIST_RULE, PATTERN_RULE):
            raise ConfigError(f"unknown coded-value rule {self.pattern!r}")

    def matches_int(self, v: int) -> bool:
        if self.pattern == LIST_RULE:
            return v in self.explicit_values
        if v < 0:
            return False
        digits = str(v)
        return (
            len(digits) >= self.min_digits
            and digits[0] == "9"
            and digits[-1] in "456789"
        )


@dataclass(frozen=True)
class DropEntry:
    column: str
    reason: str  # high_missing | constant | policy
    statistic: float


@dataclass
class DropLog:
    entries: list = field(default_factory=list)

    def extend(self, other: "DropLog") -> None:
        self.entries.extend(other.entries)

    def dropped_names(self) -> list:
        return [e.column for e in self.entries]

    def to_csv(self) -> str:
        lines = ["column,reason,statistic"]
        for e in self.entries:
            lines.append(f"{e.column},{e.reason},{e.statistic!r}")
        return "\n".join(lines) + "\n"


def _integral_cells(values: np.ndarray):
    """(mask, ints) for cells that hold an exact non-huge integer."""
    finite = np.isfinite(values)
    rounded = np.where(finite, np.round(values), 0.0)
    ok = finite & (np.abs(values - rounded) < _INTEGRAL_TOL) & (np.abs(rounded) < 2**53)
    return ok, rounded.astype(np.int64)


def detect_coded(column: Column, rule: CodedValueRule = CodedValueRule()) -> set:
    """Distinct cell values of the column that match the sentinel rule."""
    if column.kind is not ColumnKind.RAW:
        raise ConfigError(f"detect_coded expects a raw column, got {column.kind.value}")
    ok, ints = _integral_cells(column.values)
    ok &= ~column.missing
    found = set()
    for v in np.unique(ints[ok]):
        if rule.matches_int(int(v)):
            found.add(int(v))
    return found


def detect_coded_table(table: Table, rule: CodedValueRule = CodedValueRule()) -> dict:
    """Per-predictor coded-value sets (empty sets omitted)."""
    out = {}
    for c in table.columns:
        if c.kind is ColumnKind.TARGET:
            continue
        codes = detect_coded(c, rule)
        if codes:
            out[c.name] = codes
    return out


def recode_as_missing(table: Table, per_column_codes: dict) -> Table:
    """Turn every cell matching its column's code set into a missing cell."""
    cols = []
    counts = {}
    for c in table.columns:
        codes = per_column_codes.get(c.name)
        if not codes:
            cols.append(c)
            continue
        ok, ints = _integral_cells(c.values)
        hit = ok & ~c.missing & np.isin(ints, sorted(codes))
        if not hit.any():
            cols.append(c)
            continue
        counts[c.name] = int(hit.sum())
        cols.append(replace(c, missing=c.missing | hit))
    if not counts:
        return table.logged("recode_as_missing cells=0")
    detail = ",".join(f"{k}:{v}" for k, v in sorted(counts.items()))
    return table.with_columns(cols, f"recode_as_missing {detail}")


def drop_high_missing(table: Table, threshold: float = 0.30):
    """Drop predictors whose missing fraction strictly exceeds the threshold."""
    if not (0.0 < threshold <= 1.0):
        raise ConfigError(f"missing threshold must be in (0, 1], got {threshold}")
    log = DropLog()
    kept = []
    for c in table.columns:
        frac = c.missing_fraction()
        if c.kind is not ColumnKind.TARGET and frac > threshold:
            log.entries.append(DropEntry(c.name, "high_missing", frac))
        else:
            kept.append(c)
    if not log.entries:
        return table, log
    entry = f"drop_high_missing threshold={threshold} dropped={len(log.entries)}"
    return table.with_columns(kept, entry), log


def drop_constant(table: Table):
    """Drop predictors with at most one distinct non-missing value.

    All-missing columns count as constant: after imputation they would
    collapse to a single value anyway.
    """
    log = DropLog()
    kept = []
    for c in table.columns:
        if c.kind is ColumnKind.TARGET:
            kept.append(c)
            continue
        present = c.present()
        distinct = np.unique(present)
        if distinct.size <= 1:
            stat = float(distinct[0]) if distinct.size else float("nan")
            log.entries.append(DropEntry(c.name, "constant", stat))
        else:
            kept.append(c)
    if not log.entries:
        return table, log
    entry = f"drop_constant dropped={len(log.entries)}"
    return table.with_columns(kept, entry), log
