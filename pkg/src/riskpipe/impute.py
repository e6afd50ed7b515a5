"""Missing-value imputation: sample median or good-rate custom bins.

The custom strategy runs while coded sentinels are still in place. Per
column it builds five equal-frequency bins over the genuine (non-coded,
non-missing) values, computes each bin's good rate and median, then maps
every coded value to the median of the bin whose good rate is closest to
the rows carrying that code. Genuinely missing cells get the global
median of the genuine values. This keeps sentinel magnitudes (9999998,
...) from leaking into the imputed distribution while preserving the
outcome profile of the rows they mark.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ._grouping import equal_frequency_groups, group_rows
from .errors import DataError
from .table import Column, ColumnKind, Table

MEDIAN = "median"
CUSTOM_BINS = "custom_bins"

MANIFEST_VERSION = "riskpipe-imputation v1"


@dataclass(frozen=True)
class GoodRateBins:
    lower: np.ndarray
    upper: np.ndarray
    count: np.ndarray
    good_rate: np.ndarray
    median_value: np.ndarray

    @property
    def n_bins(self) -> int:
        return self.lower.size


@dataclass
class ColumnImputer:
    strategy: str
    median: float  # global median of genuine values; used by both strategies
    bins: GoodRateBins | None = None
    assignments: dict = field(default_factory=dict)  # coded int -> replacement
    codes: frozenset = frozenset()
    note: str = ""


@dataclass
class ImputationModel:
    strategy: str
    good_label: int
    per_column: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def entry(self, name: str) -> ColumnImputer:
        if name not in self.per_column:
            raise DataError(f"imputation model has no entry for column {name}")
        return self.per_column[name]


def fit_median(column: Column) -> ColumnImputer:
    present = column.present()
    if present.size == 0:
        raise DataError(
            f"column {column.name} is all-missing; it should have been dropped"
        )
    return ColumnImputer(MEDIAN, float(np.median(present)))


def _coded_mask(values: np.ndarray, missing: np.ndarray, codes) -> np.ndarray:
    if not codes:
        return np.zeros(values.shape, dtype=bool)
    rounded = np.where(missing, 0.0, np.round(values))
    integral = ~missing & (np.abs(values - rounded) < 1e-9)
    return integral & np.isin(rounded, [float(c) for c in sorted(codes)])


def fit_custom_bins(
    column: Column,
    target: Column,
    codeset,
    good_label: int = 0,
    n_bins: int = 5,
    use_mean: bool = False,
) -> ColumnImputer:
    """Good-rate bin matching over a column that still carries its codes.

    Falls back to plain median imputation (note set) when fewer than
    n_bins distinct genuine values exist.
    """
    tv = target.values
    if target.missing.any() or not np.isin(tv, (0.0, 1.0)).all():
        raise DataError("custom-bin imputation needs a complete binary target")
    coded = _coded_mask(column.values, column.missing, codeset)
    genuine = ~column.missing & ~coded
    gen_vals = column.values[genuine]
    if gen_vals.size == 0:
        raise DataError(f"column {column.name} has no genuine values to bin")
    global_median = float(np.median(gen_vals))
    codes = frozenset(int(c) for c in codeset)

    uniq, counts = np.unique(gen_vals, return_counts=True)
    if uniq.size < n_bins:
        note = f"fallback=median distinct={uniq.size}<{n_bins}"
        assignments = {c: global_median for c in codes}
        return ColumnImputer(MEDIAN, global_median, None, assignments, codes, note)

    offsets = equal_frequency_groups(counts, n_bins)
    grp = group_rows(gen_vals, offsets, uniq)
    n_groups = offsets.size - 1
    good = (tv[genuine] == float(good_label))
    lower = np.empty(n_groups)
    upper = np.empty(n_groups)
    count = np.empty(n_groups, dtype=np.int64)
    rate = np.empty(n_groups)
    center = np.empty(n_groups)
    for k in range(n_groups):
        inb = grp == k
        vals_k = gen_vals[inb]
        lower[k] = vals_k.min()
        upper[k] = vals_k.max()
        count[k] = vals_k.size
        rate[k] = float(good[inb].mean())
        center[k] = float(vals_k.mean() if use_mean else np.median(vals_k))
    bins = GoodRateBins(lower, upper, count, rate, center)

    assignments = {}
    rounded = np.where(column.missing, np.nan, np.round(column.values))
    for c in sorted(codes):
        rows = coded & (rounded == float(c))
        if not rows.any():
            continue
        code_rate = float((tv[rows] == float(good_label)).mean())
        # ties go to the lower bin index (argmin keeps the first minimum)
        k = int(np.argmin(np.abs(rate - code_rate)))
        assignments[c] = float(center[k])
    note = "" if n_groups == n_bins else f"bins_collapsed_to={n_groups}"
    return ColumnImputer(CUSTOM_BINS, global_median, bins, assignments, codes, note)


def fit_imputation(
    table: Table,
    strategy: str,
    codes_per_column: dict | None = None,
    good_label: int = 0,
    n_bins: int = 5,
    use_mean: bool = False,
) -> ImputationModel:
    if strategy not in (MEDIAN, CUSTOM_BINS):
        raise DataError(f"unknown imputation strategy {strategy!r}")
    codes_per_column = codes_per_column or {}
    model = ImputationModel(strategy, good_label)
    target = table.target_column() if strategy == CUSTOM_BINS else None
    for c in table.columns:
        if c.kind is ColumnKind.TARGET:
            continue
        if strategy == MEDIAN:
            model.per_column[c.name] = fit_median(c)
        else:
            entry = fit_custom_bins(
                c, target, codes_per_column.get(c.name, ()), good_label, n_bins, use_mean
            )
            if entry.note:
                model.warnings.append(f"{c.name}: {entry.note}")
            model.per_column[c.name] = entry
    return model


def apply_imputation(model: ImputationModel, table: Table) -> Table:
    """Fill every predictor cell from the fitted model; never refits.

    Coded values unseen at fit time map to the column's global median
    (recorded as a warning on the model).
    """
    cols = []
    filled = 0
    for c in table.columns:
        if c.kind is ColumnKind.TARGET:
            cols.append(c)
            continue
        entry = model.entry(c.name)
        values = c.values.copy()
        coded = _coded_mask(values, c.missing, entry.codes)
        replace_mask = c.missing | coded
        if not replace_mask.any():
            cols.append(c)
            continue
        values[c.missing] = entry.median
        if coded.any():
            rounded = np.round(values)
            for code in sorted(entry.codes):
                rows = coded & (rounded == float(code))
                if not rows.any():
                    continue
                if code in entry.assignments:
                    values[rows] = entry.assignments[code]
                else:
                    values[rows] = entry.median
                    model.warnings.append(
                        f"{c.name}: code {code} unseen at fit, used global median"
                    )
        filled += int(replace_mask.sum())
        cols.append(Column(c.name, values, np.zeros(len(c), dtype=bool), c.kind))
    return table.with_columns(cols, f"impute strategy={model.strategy} cells={filled}")


# -- manifest ---------------------------------------------------------------
def save_imputation(model: ImputationModel, path) -> None:
    lines = [
        MANIFEST_VERSION,
        f"strategy\t{model.strategy}",
        f"good_label\t{model.good_label}",
    ]
    for name in sorted(model.per_column):
        e = model.per_column[name]
        lines.append(
            f"column\t{name}\t{e.strategy}\tmedian={e.median!r}"
            f"\tcodes={','.join(str(c) for c in sorted(e.codes))}"
        )
        if e.bins is not None:
            for k in range(e.bins.n_bins):
                lines.append(
                    f"bin\t{name}\t{k}\tlower={float(e.bins.lower[k])!r}"
                    f"\tupper={float(e.bins.upper[k])!r}\tcount={int(e.bins.count[k])}"
                    f"\tgood_rate={float(e.bins.good_rate[k])!r}"
                    f"\tmedian={float(e.bins.median_value[k])!r}"
                )
        for code in sorted(e.assignments):
            lines.append(f"assign\t{name}\t{code}\t{float(e.assignments[code])!r}")
        if e.note:
            lines.append(f"note\t{name}\t{e.note}")
    Path(path).write_text("\n".join(lines) + "\n")
