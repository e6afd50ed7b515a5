"""Equal-frequency grouping of sorted distinct values, shared by the
imputation good-rate bins and the pre-binning stage."""
from __future__ import annotations

import numpy as np


def equal_frequency_groups(counts: np.ndarray, max_groups: int) -> np.ndarray:
    """Split distinct values (given their row counts, in value order) into
    up to max_groups contiguous groups of near-equal row count.

    Returns offsets into the distinct-value axis, length n_groups + 1.
    Ties never straddle a boundary because grouping happens on distinct
    values; a dominant value simply absorbs several nominal chunks.
    """
    counts = np.asarray(counts, dtype=np.int64)
    n_vals = counts.size
    total = int(counts.sum())
    if n_vals == 0 or total == 0:
        return np.zeros(1, dtype=np.int64)
    max_groups = max(1, min(int(max_groups), n_vals))
    offsets = [0]
    cum = 0
    next_k = 1
    for i in range(n_vals):
        cum += int(counts[i])
        if i + 1 == n_vals or len(offsets) >= max_groups:
            break
        if cum >= next_k * total / max_groups:
            offsets.append(i + 1)
            # skip thresholds a dominant value has already passed
            next_k = max(next_k + 1, cum * max_groups // total + 1)
    offsets.append(n_vals)
    return np.asarray(offsets, dtype=np.int64)


def group_rows(values: np.ndarray, offsets: np.ndarray, uniq: np.ndarray) -> np.ndarray:
    """Group index for each value, assigning by distinct-value membership."""
    # position of each value in the distinct axis, then bucket by offsets
    pos = np.searchsorted(uniq, values)
    return np.searchsorted(offsets[1:-1], pos, side="right")
