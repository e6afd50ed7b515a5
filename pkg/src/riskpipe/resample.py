"""Class rebalancing for training folds: random oversampling and SMOTE.

Both methods keep every original row and append synthetics until the
class counts match. SMOTE interpolates between a minority row and one of
its k nearest minority neighbours (euclidean distance on standardized
features); each synthetic's (a, b, u) provenance triple is returned so
the geometry can be re-derived exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConfigError, DataError

NONE = "none"
RANDOM_OVER = "random_over"
SMOTE = "smote"


@dataclass(frozen=True)
class ResamplePlan:
    strategy: str = NONE
    seed: int = 0
    k_neighbors: int = 5
    target_ratio: float = 1.0

    def __post_init__(self):
        if self.strategy not in (NONE, RANDOM_OVER, SMOTE):
            raise ConfigError(f"unknown resampling strategy {self.strategy!r}")
        if self.target_ratio != 1.0:
            raise ConfigError("only target_ratio=1.0 (full balance) is supported")
        if self.k_neighbors < 1:
            raise ConfigError("k_neighbors must be >= 1")


@dataclass
class ResampleLog:
    strategy: str
    synthetic_from: list = field(default_factory=list)  # (a_row, b_row, u) into X
    notes: list = field(default_factory=list)


def _classes(y: np.ndarray):
    y = np.asarray(y, dtype=np.float64)
    if not np.isin(y, (0.0, 1.0)).all():
        raise DataError("resampling needs a binary 0/1 label vector")
    pos = np.flatnonzero(y == 1.0)
    neg = np.flatnonzero(y == 0.0)
    if pos.size == 0 or neg.size == 0:
        raise DataError("resampling needs both classes present")
    if pos.size <= neg.size:
        return pos, neg
    return neg, pos


def random_oversample(X: np.ndarray, y: np.ndarray, plan: ResamplePlan):
    """Duplicate uniformly-sampled minority rows until counts are equal.

    Row order: all originals first, then the synthetics.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    minority, majority = _classes(y)
    needed = majority.size - minority.size
    logrec = ResampleLog(RANDOM_OVER)
    if needed == 0:
        return X, y, logrec
    rng = np.random.default_rng(plan.seed)
    picks = minority[rng.integers(0, minority.size, size=needed)]
    logrec.synthetic_from = [(int(r), int(r), 0.0) for r in picks]
    X2 = np.vstack([X, X[picks]])
    y2 = np.concatenate([y, y[picks]])
    return X2, y2, logrec


def smote(X: np.ndarray, y: np.ndarray, plan: ResamplePlan):
    """Synthetic minority oversampling; falls back to row duplication when
    a single minority row leaves nothing to interpolate."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    minority, majority = _classes(y)
    needed = majority.size - minority.size
    logrec = ResampleLog(SMOTE)
    if needed == 0:
        return X, y, logrec
    if minority.size == 1:
        logrec.notes.append("single minority row: fell back to random oversampling")
        X2, y2, inner = random_oversample(X, y, plan)
        logrec.synthetic_from = inner.synthetic_from
        return X2, y2, logrec
    k = plan.k_neighbors
    if minority.size <= k:
        k = minority.size - 1
        logrec.notes.append(f"k reduced to {k} (minority count {minority.size})")

    Xm = X[minority]
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    sd = np.where(sd == 0.0, 1.0, sd)
    Zm = (Xm - mu) / sd
    neighbors = kernels.kneighbor_indices(np.ascontiguousarray(Zm), k)

    rng = np.random.default_rng(plan.seed)
    base = rng.integers(0, minority.size, size=needed)
    pick = rng.integers(0, k, size=needed)
    u = rng.random(needed)
    nb = neighbors[base, pick]
    A = Xm[base]
    B = Xm[nb]
    synth = A + u[:, None] * (B - A)
    logrec.synthetic_from = [
        (int(minority[a]), int(minority[b]), float(uu))
        for a, b, uu in zip(base, nb, u)
    ]
    X2 = np.vstack([X, synth])
    y2 = np.concatenate([y, y[minority[base]]])
    return X2, y2, logrec


def resample(X: np.ndarray, y: np.ndarray, plan: ResamplePlan):
    if plan.strategy == NONE:
        return np.asarray(X, dtype=np.float64), np.asarray(y, dtype=np.float64), ResampleLog(NONE)
    if plan.strategy == RANDOM_OVER:
        return random_oversample(X, y, plan)
    return smote(X, y, plan)
