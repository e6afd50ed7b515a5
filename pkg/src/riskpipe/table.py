"""Columnar data model, CSV ingestion, target derivation and persistence.

All cell values are float64; a missing cell is represented by NaN in the
value array plus a True entry in the column's boolean mask. Tables are
immutable by convention: every transform returns a new Table and appends
a line to the provenance log.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import DataError

MANIFEST_VERSION = "riskpipe-table v1"


class ColumnKind(str, Enum):
    RAW = "raw"
    CONTINUOUS = "continuous"
    DISCRETE = "discrete"
    TARGET = "target"


class ModelKind(str, Enum):
    MAIL_OR_DONT = "mail_or_dont"
    RESPONDERS = "responders"
    CREDIT = "credit"


@dataclass(frozen=True)
class TargetSpec:
    model_kind: ModelKind
    positive_label_meaning: str = ""

    @property
    def favorable_label(self) -> int:
        # "good rate" counts favorable outcomes: no delinquency for the
        # credit target (label 0), a positive response otherwise (label 1).
        return 0 if self.model_kind is ModelKind.CREDIT else 1


@dataclass(frozen=True)
class Column:
    name: str
    values: np.ndarray
    missing: np.ndarray
    kind: ColumnKind = ColumnKind.RAW

    def __post_init__(self):
        if not self.name:
            raise DataError("column name must be non-empty")
        values = np.asarray(self.values, dtype=np.float64).copy()
        missing = np.asarray(self.missing, dtype=bool).copy()
        if values.shape != missing.shape or values.ndim != 1:
            raise DataError(f"column {self.name}: values/mask shape mismatch")
        values[missing] = np.nan
        values.flags.writeable = False
        missing.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "missing", missing)

    def __len__(self) -> int:
        return self.values.shape[0]

    def present(self) -> np.ndarray:
        """Non-missing values, in row order."""
        return self.values[~self.missing]

    def missing_fraction(self) -> float:
        return float(self.missing.mean()) if len(self) else 0.0

    def with_kind(self, kind: ColumnKind) -> "Column":
        if self.kind is not ColumnKind.RAW and kind is not self.kind:
            raise DataError(
                f"column {self.name}: kind may only transition from raw, "
                f"not {self.kind.value} -> {kind.value}"
            )
        return replace(self, kind=kind)


@dataclass(frozen=True)
class Table:
    columns: tuple = ()
    n_rows: int = 0
    provenance: tuple = ()

    def __post_init__(self):
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise DataError(f"duplicate column names: {dupes}")
        for c in self.columns:
            if len(c) != self.n_rows:
                raise DataError(
                    f"column {c.name} has {len(c)} cells, table has {self.n_rows} rows"
                )
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "provenance", tuple(self.provenance))

    # -- access -----------------------------------------------------------
    def names(self) -> list:
        return [c.name for c in self.columns]

    def __contains__(self, name: str) -> bool:
        return any(c.name == name for c in self.columns)

    def column(self, name: str) -> Column:
        for c in self.columns:
            if c.name == name:
                return c
        raise DataError(f"unknown column: {name}")

    def target_column(self) -> Column:
        targets = [c for c in self.columns if c.kind is ColumnKind.TARGET]
        if len(targets) != 1:
            raise DataError(f"expected exactly one target column, found {len(targets)}")
        return targets[0]

    def predictor_names(self) -> list:
        return [c.name for c in self.columns if c.kind is not ColumnKind.TARGET]

    def predictor_matrix(self, names=None) -> np.ndarray:
        """Dense (n_rows, p) float64 view of the named predictors."""
        names = list(names) if names is not None else self.predictor_names()
        return np.column_stack([self.column(n).values for n in names]) if names else np.empty((self.n_rows, 0))

    # -- transforms -------------------------------------------------------
    def logged(self, entry: str) -> "Table":
        return replace(self, provenance=self.provenance + (entry,))

    def with_columns(self, columns, entry: str) -> "Table":
        return Table(tuple(columns), self.n_rows, self.provenance + (entry,))

    def take_rows(self, row_index: np.ndarray, entry: str) -> "Table":
        cols = tuple(
            replace(c, values=c.values[row_index], missing=c.missing[row_index])
            for c in self.columns
        )
        return Table(cols, int(len(row_index)), self.provenance + (entry,))


def load_csv(path, missing_tokens=frozenset({""})) -> Table:
    """Parse a headered CSV of numeric and missing cells into a Table.

    A cell is missing when (stripped) it is empty or a member of
    missing_tokens; anything else must parse as a number.
    """
    path = Path(path)
    try:
        fh = open(path, newline="")
    except OSError as err:
        raise DataError(f"cannot read {path}: {err}") from err
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file, header required") from None
        header = [h.strip() for h in header]
        width = len(header)
        values = [[] for _ in range(width)]
        missing = [[] for _ in range(width)]
        for row_idx, row in enumerate(reader):
            if len(row) != width:
                raise DataError(
                    f"{path}: ragged row {row_idx} has {len(row)} fields, header has {width}"
                )
            for j, raw in enumerate(row):
                tok = raw.strip()
                if tok == "" or tok in missing_tokens:
                    values[j].append(np.nan)
                    missing[j].append(True)
                    continue
                try:
                    values[j].append(float(tok))
                except ValueError:
                    raise DataError(
                        f"{path}: non-numeric field {tok!r} at row {row_idx}, column {header[j]}"
                    ) from None
                missing[j].append(False)
    n_rows = len(values[0]) if width else 0
    cols = tuple(
        Column(header[j], np.asarray(values[j]), np.asarray(missing[j], dtype=bool))
        for j in range(width)
    )
    return Table(cols, n_rows, (f"load_csv path={path} rows={n_rows} cols={width}",))


def write_csv(table: Table, path, missing_token="") -> None:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(table.names())
        cols = table.columns
        for i in range(table.n_rows):
            writer.writerow(
                [missing_token if c.missing[i] else repr(float(c.values[i])) for c in cols]
            )


def derive_target(table: Table, spec: TargetSpec, goodbad_col: str) -> Table:
    """Append the 0/1 target for the requested model kind and drop the
    raw good/bad indicator from the predictors.

    Absent good/bad means the mail campaign got no response; the credit
    target therefore also filters the table down to responder rows.
    """
    gb = table.column(goodbad_col)
    present = ~gb.missing
    vals = gb.values
    invalid = present & (vals != 0.0) & (vals != 1.0)
    if invalid.any():
        i = int(np.flatnonzero(invalid)[0])
        raise DataError(
            f"{goodbad_col} value {vals[i]!r} at row {i} outside {{0, 1, missing}}"
        )
    bad = present & (vals == 1.0)

    rest = [c for c in table.columns if c.name != goodbad_col]
    if spec.model_kind is ModelKind.RESPONDERS:
        target = present.astype(np.float64)
        kept = table
    elif spec.model_kind is ModelKind.MAIL_OR_DONT:
        target = (present & ~bad).astype(np.float64)
        kept = table
    else:  # credit: responders only, target = the good/bad flag itself
        keep_idx = np.flatnonzero(present)
        kept = table.take_rows(keep_idx, f"derive_target filter_responders rows={len(keep_idx)}")
        target = kept.column(goodbad_col).values.copy()
        rest = [c for c in kept.columns if c.name != goodbad_col]

    tcol = Column(
        "target",
        target,
        np.zeros(kept.n_rows, dtype=bool),
        ColumnKind.TARGET,
    )
    entry = (
        f"derive_target kind={spec.model_kind.value} goodbad={goodbad_col} "
        f"positives={int(target.sum())}"
    )
    return kept.with_columns(tuple(rest) + (tcol,), entry)


def drop_columns(table: Table, names, reason: str = "policy") -> Table:
    names = set(names)
    unknown = names - set(table.names())
    if unknown:
        raise DataError(f"drop_columns: unknown columns {sorted(unknown)}")
    if not names:
        return table
    kept = tuple(c for c in table.columns if c.name not in names)
    entry = f"drop_columns reason={reason} names={','.join(sorted(names))}"
    return table.with_columns(kept, entry)


# -- native artifact persistence ------------------------------------------
def save_table(table: Table, out_dir) -> None:
    """Write the table as a directory: text manifest + column-major
    binary blocks (float64 values, uint8 mask). Round-trips bit-exactly.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = [MANIFEST_VERSION, f"n_rows\t{table.n_rows}", f"n_cols\t{len(table.columns)}"]
    for c in table.columns:
        lines.append(f"col\t{c.name}\t{c.kind.value}")
    for entry in table.provenance:
        lines.append(f"prov\t{entry}")
    (out_dir / "manifest.txt").write_text("\n".join(lines) + "\n")
    with open(out_dir / "data.bin", "wb") as fh:
        for c in table.columns:
            fh.write(np.ascontiguousarray(c.values, dtype="<f8").tobytes())
    with open(out_dir / "mask.bin", "wb") as fh:
        for c in table.columns:
            fh.write(c.missing.astype(np.uint8).tobytes())


def load_table(in_dir) -> Table:
    in_dir = Path(in_dir)
    manifest = in_dir / "manifest.txt"
    if not manifest.is_file():
        raise DataError(f"{in_dir}: not a table artifact (manifest.txt missing)")
    lines = manifest.read_text().splitlines()
    if not lines or lines[0] != MANIFEST_VERSION:
        raise DataError(f"{in_dir}: unsupported manifest version {lines[:1]}")
    n_rows = n_cols = None
    col_meta = []
    provenance = []
    for line in lines[1:]:
        tag, _, rest = line.partition("\t")
        if tag == "n_rows":
            n_rows = int(rest)
        elif tag == "n_cols":
            n_cols = int(rest)
        elif tag == "col":
            name, _, kind = rest.rpartition("\t")
            col_meta.append((name, ColumnKind(kind)))
        elif tag == "prov":
            provenance.append(rest)
        else:
            raise DataError(f"{in_dir}: unknown manifest line {line!r}")
    if n_rows is None or n_cols is None or len(col_meta) != n_cols:
        raise DataError(f"{in_dir}: inconsistent manifest")
    data = np.frombuffer((in_dir / "data.bin").read_bytes(), dtype="<f8")
    mask = np.frombuffer((in_dir / "mask.bin").read_bytes(), dtype=np.uint8)
    if data.size != n_rows * n_cols or mask.size != n_rows * n_cols:
        raise DataError(f"{in_dir}: binary block size mismatch")
    cols = []
    for j, (name, kind) in enumerate(col_meta):
        sl = slice(j * n_rows, (j + 1) * n_rows)
        cols.append(Column(name, data[sl], mask[sl].astype(bool), kind))
    return Table(tuple(cols), n_rows, tuple(provenance))
