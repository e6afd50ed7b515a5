"""Skewness/kurtosis profiling and the continuous-vs-discrete call.

Population (biased) central moments; kurtosis is the excess form, so a
normal distribution sits at 0. A column is discrete only when all three
hold at once: fewer than 15 unique values, |skewness| > 2, and excess
kurtosis > 20. Boundary values classify as not-high (strict inequalities).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .table import Column, ColumnKind, Table

SKEW_HIGH = 2.0
KURT_HIGH = 20.0
DISCRETE_UNIQUE_LIMIT = 15


@dataclass(frozen=True)
class ColumnProfile:
    name: str
    skewness: float
    kurtosis: float
    unique_count: int
    skew_class: str  # High | LowModerate
    kurt_class: str  # High | Low
    kind: ColumnKind


def classify(unique_count: int, skewness: float, kurtosis: float):
    skew_class = "High" if (skewness > SKEW_HIGH or skewness < -SKEW_HIGH) else "LowModerate"
    kurt_class = "High" if kurtosis > KURT_HIGH else "Low"
    discrete = (
        unique_count < DISCRETE_UNIQUE_LIMIT
        and skew_class == "High"
        and kurt_class == "High"
    )
    kind = ColumnKind.DISCRETE if discrete else ColumnKind.CONTINUOUS
    return skew_class, kurt_class, kind


def profile(column: Column) -> ColumnProfile:
    x = column.present()
    if x.size < 3:
        raise DataError(f"column {column.name}: need >=3 values to profile, got {x.size}")
    centered = x - x.mean()
    m2 = float(np.mean(centered**2))
    if m2 == 0.0:
        raise DataError(f"column {column.name}: zero variance (constant columns are dropped)")
    m3 = float(np.mean(centered**3))
    m4 = float(np.mean(centered**4))
    skewness = m3 / m2**1.5
    kurtosis = m4 / m2**2 - 3.0
    unique_count = int(np.unique(x).size)
    skew_class, kurt_class, kind = classify(unique_count, skewness, kurtosis)
    return ColumnProfile(column.name, skewness, kurtosis, unique_count, skew_class, kurt_class, kind)


def profile_table(table: Table):
    """Profile every predictor and return (retagged table, profiles)."""
    profiles = []
    cols = []
    for c in table.columns:
        if c.kind is ColumnKind.TARGET:
            cols.append(c)
            continue
        p = profile(c)
        profiles.append(p)
        cols.append(c.with_kind(p.kind) if c.kind is ColumnKind.RAW else c)
    out = table.with_columns(cols, f"profile columns={len(profiles)}")
    return out, profiles


def profiles_to_csv(profiles) -> str:
    lines = ["name,skewness,kurtosis,unique_count,skew_class,kurt_class,kind"]
    for p in profiles:
        lines.append(
            f"{p.name},{p.skewness!r},{p.kurtosis!r},{p.unique_count},"
            f"{p.skew_class},{p.kurt_class},{p.kind.value}"
        )
    return "\n".join(lines) + "\n"
