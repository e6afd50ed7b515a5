"""Pre-binning, IV-optimal merging, WoE transform and the IV filter.

Pre-bins are contiguous groups of sorted distinct values: equal-frequency
for quantile mode, one group per distinct value for categorical mode
(collapsing to quantile above max_prebins). optimal_merge then finds the
exact maximizer of total information value over contiguous partitions of
the pre-bin sequence via dynamic programming layered by bin count, under
a minimum bin-size fraction, a bin-count cap, and an optional event-rate
monotonicity constraint whose direction is picked by achievable IV.

The merge objective is the unsmoothed IV (zero counts are lifted to 0.5
inside the log only, so pure bins score high but finite); the reported
per-bin WoE and total IV use additive smoothing s so they stay finite,
with s=0 available for the exact unsmoothed figures.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._grouping import equal_frequency_groups
from .errors import ConfigError, DataError, EmptySelectionError
from .table import Column, ColumnKind, Table

log = logging.getLogger(__name__)

QUANTILE = "quantile"
CATEGORICAL = "categorical"

MANIFEST_VERSION = "riskpipe-binning v1"


@dataclass(frozen=True)
class MergeConstraints:
    min_bin_frac: float = 0.05
    max_bins: int = 10
    monotonic: str = "auto"  # none | auto

    def __post_init__(self):
        if not (0.0 <= self.min_bin_frac <= 1.0):
            raise ConfigError(f"min_bin_frac must be in [0, 1], got {self.min_bin_frac}")
        if self.max_bins < 1:
            raise ConfigError(f"max_bins must be >= 1, got {self.max_bins}")
        if self.monotonic not in ("none", "auto"):
            raise ConfigError(f"monotonic must be none|auto, got {self.monotonic!r}")


@dataclass(frozen=True)
class PreBins:
    mode: str
    uniq: np.ndarray      # sorted distinct values
    offsets: np.ndarray   # group index ranges into uniq, len n_prebins+1
    good: np.ndarray      # per prebin
    bad: np.ndarray
    missing_good: int = 0
    missing_bad: int = 0
    note: str = ""

    @property
    def n_prebins(self) -> int:
        return self.offsets.size - 1

    @property
    def rows(self) -> np.ndarray:
        return self.good + self.bad


@dataclass(frozen=True)
class MergedBins:
    groups: tuple          # (prebin_lo, prebin_hi) per final bin
    good: np.ndarray
    bad: np.ndarray
    objective_iv: float    # unsmoothed DP objective
    direction: str         # none | non_decreasing | non_increasing
    note: str = ""

    @property
    def n_bins(self) -> int:
        return len(self.groups)


@dataclass
class VariableBinning:
    name: str
    mode: str                     # effective mode of the fitted variable
    cuts: np.ndarray              # quantile: first value of bins 1..B-1
    cat_values: np.ndarray | None # categorical: sorted distinct values
    cat_bins: np.ndarray | None   # categorical: final bin per distinct value
    bin_lo: np.ndarray
    bin_hi: np.ndarray
    good: np.ndarray
    bad: np.ndarray
    woe: np.ndarray
    iv: float
    missing_good: int
    missing_bad: int
    missing_woe: float
    direction: str
    note: str = ""

    @property
    def n_bins(self) -> int:
        return self.woe.size


@dataclass
class BinningModel:
    mode: str
    smoothing: float
    max_prebins: int
    constraints: MergeConstraints
    good_label: int
    variables: dict = field(default_factory=dict)

    def iv_table(self) -> dict:
        return {name: vb.iv for name, vb in self.variables.items()}


def _check_binary_target(target: Column) -> np.ndarray:
    tv = target.values
    if target.missing.any() or not np.isin(tv, (0.0, 1.0)).all():
        raise DataError("binning needs a complete binary 0/1 target")
    return tv


def prebin(
    column: Column,
    target: Column,
    mode: str = QUANTILE,
    max_prebins: int = 20,
    good_label: int = 0,
) -> PreBins:
    if mode not in (QUANTILE, CATEGORICAL):
        raise ConfigError(f"unknown binning mode {mode!r}")
    tv = _check_binary_target(target)
    good_row = tv == float(good_label)
    present = ~column.missing
    missing_good = int((good_row & ~present).sum())
    missing_bad = int((~good_row & ~present).sum())
    vals = column.values[present]
    if vals.size == 0:
        raise DataError(f"column {column.name}: no non-missing values to bin")
    uniq, inverse = np.unique(vals, return_inverse=True)
    good_u = np.bincount(inverse, weights=good_row[present].astype(np.float64), minlength=uniq.size)
    row_u = np.bincount(inverse, minlength=uniq.size).astype(np.float64)
    bad_u = row_u - good_u

    note = ""
    effective = mode
    if mode == CATEGORICAL:
        if uniq.size <= max_prebins:
            offsets = np.arange(uniq.size + 1, dtype=np.int64)
        else:
            note = f"categorical_collapsed_to_quantile unique={uniq.size}"
            log.info("%s: %s", column.name, note)
            effective = QUANTILE
            offsets = equal_frequency_groups(row_u.astype(np.int64), max_prebins)
    else:
        offsets = equal_frequency_groups(row_u.astype(np.int64), max_prebins)

    n_groups = offsets.size - 1
    cg = np.concatenate(([0.0], np.cumsum(good_u)))
    cb = np.concatenate(([0.0], np.cumsum(bad_u)))
    good = cg[offsets[1:]] - cg[offsets[:-1]]
    bad = cb[offsets[1:]] - cb[offsets[:-1]]
    return PreBins(effective, uniq, offsets, good, bad, missing_good, missing_bad, note)


def _objective_term(gi: float, bi: float, G: float, B: float) -> float:
    """Unsmoothed IV contribution of one candidate bin; a zero count is
    lifted to 0.5 inside the log only, keeping pure bins finite."""
    gs = gi / G
    bs = bi / B
    gl = (gi if gi > 0.0 else 0.5) / G
    bl = (bi if bi > 0.0 else 0.5) / B
    return (gs - bs) * math.log(gl / bl)


def _dp_best(T, feasible, rate, n, max_bins, direction):
    """Best (iv, cuts) over partitions into 1..max_bins contiguous bins.

    Strictly-greater comparisons walk bin counts upward, so an exact IV
    tie resolves to the fewest bins. direction constrains consecutive
    event rates: none | non_decreasing | non_increasing.
    """
    NEG = -math.inf
    # vals[k][j, i]: best IV over partitions of prebins [0, i) into k bins
    # with last bin [j, i); backs[k][j, i]: start of the preceding bin.
    vals = [None]
    backs = [None]
    v1 = np.full((n + 1, n + 1), NEG)
    for i in range(1, n + 1):
        if feasible[0, i]:
            v1[0, i] = T[0, i]
    vals.append(v1)
    backs.append(np.full((n + 1, n + 1), -1, dtype=np.int64))
    for k in range(2, max_bins + 1):
        nxt = np.full((n + 1, n + 1), NEG)
        nback = np.full((n + 1, n + 1), -1, dtype=np.int64)
        prev = vals[k - 1]
        for j in range(1, n):
            prev_col = prev[:j, j]
            if not (prev_col > NEG).any():
                continue
            for i in range(j + 1, n + 1):
                if not feasible[j, i]:
                    continue
                if direction == "none":
                    allowed = prev_col
                elif direction == "non_decreasing":
                    allowed = np.where(rate[:j, j] <= rate[j, i], prev_col, NEG)
                else:
                    allowed = np.where(rate[:j, j] >= rate[j, i], prev_col, NEG)
                jp = int(np.argmax(allowed))
                if allowed[jp] == NEG:
                    continue
                nxt[j, i] = allowed[jp] + T[j, i]
                nback[j, i] = jp
        vals.append(nxt)
        backs.append(nback)

    best_iv = NEG
    best_k = 0
    best_j = -1
    for k in range(1, max_bins + 1):
        col = vals[k][:, n]
        j = int(np.argmax(col))
        if col[j] > best_iv:
            best_iv = float(col[j])
            best_k = k
            best_j = j
    if best_k == 0:
        return NEG, None
    cuts = [n]
    j, i = best_j, n
    for k in range(best_k, 0, -1):
        cuts.append(j)
        j, i = int(backs[k][j, i]), j
    cuts.reverse()
    return best_iv, cuts


def optimal_merge(prebins: PreBins, constraints: MergeConstraints = MergeConstraints()) -> MergedBins:
    """Exact IV maximizer over contiguous partitions of the pre-bins.

    Falls back to the single merged bin (note set) if no partition meets
    the constraints, which can only happen when min_bin_frac > 1.
    """
    n = prebins.n_prebins
    if n < 1:
        raise DataError("optimal_merge needs at least one prebin")
    g = prebins.good.astype(np.float64)
    b = prebins.bad.astype(np.float64)
    rows = g + b
    total = float(rows.sum())
    G = float(g.sum())
    B = float(b.sum())

    cg = np.concatenate(([0.0], np.cumsum(g)))
    cb = np.concatenate(([0.0], np.cumsum(b)))

    def agg(i, j):
        return cg[j] - cg[i], cb[j] - cb[i]

    single = MergedBins(
        ((0, n),),
        np.array([G]),
        np.array([B]),
        0.0,
        "none",
    )
    if n == 1:
        return single
    if G == 0.0 or B == 0.0:
        # degenerate target: every partition has IV 0, keep one bin
        return single

    T = np.full((n + 1, n + 1), -math.inf)
    feasible = np.zeros((n + 1, n + 1), dtype=bool)
    rate = np.zeros((n + 1, n + 1))
    min_rows = constraints.min_bin_frac * total
    for i in range(n):
        for j in range(i + 1, n + 1):
            gi, bi = agg(i, j)
            ri = gi + bi
            feasible[i, j] = ri >= min_rows
            rate[i, j] = bi / ri
            if feasible[i, j]:
                T[i, j] = _objective_term(gi, bi, G, B)

    if constraints.monotonic == "none":
        runs = [("none", *_dp_best(T, feasible, rate, n, constraints.max_bins, "none"))]
    else:
        runs = [
            (d, *_dp_best(T, feasible, rate, n, constraints.max_bins, d))
            for d in ("non_decreasing", "non_increasing")
        ]
    # higher IV wins; exact ties prefer fewer bins, then the first direction
    best = None
    for direction, iv, cuts in runs:
        if cuts is None:
            continue
        if best is None or iv > best[1] or (iv == best[1] and len(cuts) < len(best[2])):
            best = (direction, iv, cuts)
    if best is None:
        return MergedBins(single.groups, single.good, single.bad, 0.0, "none",
                          "constraints_infeasible_single_bin")
    direction, iv, cuts = best
    groups = tuple((cuts[k], cuts[k + 1]) for k in range(len(cuts) - 1))
    mg = np.array([agg(lo, hi)[0] for lo, hi in groups])
    mb = np.array([agg(lo, hi)[1] for lo, hi in groups])
    return MergedBins(groups, mg, mb, iv, direction)


def woe_iv(good: np.ndarray, bad: np.ndarray, smoothing: float = 0.5):
    """Per-bin weight of evidence and total information value.

    With smoothing s, shares are (count + s) / (total + s * n_bins), which
    keeps WoE finite for zero-count bins and still sums to one.
    """
    good = np.asarray(good, dtype=np.float64)
    bad = np.asarray(bad, dtype=np.float64)
    G = float(good.sum())
    B = float(bad.sum())
    if G <= 0.0 or B <= 0.0:
        raise DataError("degenerate target: zero total goods or bads")
    nb = good.size
    s = float(smoothing)
    gs = (good + s) / (G + s * nb)
    bs = (bad + s) / (B + s * nb)
    with np.errstate(divide="ignore"):
        woe = np.log(gs / bs)
    iv = float(((gs - bs) * woe).sum())
    return woe, iv


def fit_variable(
    column: Column,
    target: Column,
    mode: str = QUANTILE,
    max_prebins: int = 20,
    constraints: MergeConstraints = MergeConstraints(),
    smoothing: float = 0.5,
    good_label: int = 0,
) -> VariableBinning:
    pb = prebin(column, target, mode, max_prebins, good_label)
    merged = optimal_merge(pb, constraints)
    has_missing = (pb.missing_good + pb.missing_bad) > 0
    good = merged.good
    bad = merged.bad
    if has_missing:
        good = np.append(good, float(pb.missing_good))
        bad = np.append(bad, float(pb.missing_bad))
    woe_all, iv = woe_iv(good, bad, smoothing)
    woe = woe_all[: merged.n_bins]
    missing_woe = float(woe_all[-1]) if has_missing else 0.0

    # transform metadata: boundaries for quantile, a value map for categorical
    first_vals = np.array([pb.uniq[pb.offsets[lo]] for lo, hi in merged.groups])
    bin_lo = first_vals.copy()
    bin_hi = np.array([pb.uniq[pb.offsets[hi] - 1] for lo, hi in merged.groups])
    if pb.mode == CATEGORICAL:
        cat_values = pb.uniq
        cat_bins = np.empty(pb.uniq.size, dtype=np.int64)
        for k, (lo, hi) in enumerate(merged.groups):
            cat_bins[pb.offsets[lo] : pb.offsets[hi]] = k
        cuts = np.empty(0)
    else:
        cat_values = None
        cat_bins = None
        cuts = first_vals[1:]  # bin k = [first_vals[k], first_vals[k+1])
    note = ";".join(x for x in (pb.note, merged.note) if x)
    return VariableBinning(
        column.name, pb.mode, cuts, cat_values, cat_bins, bin_lo, bin_hi,
        merged.good, merged.bad, woe, iv,
        pb.missing_good, pb.missing_bad, missing_woe, merged.direction, note,
    )


def fit_binning(
    table: Table,
    mode: str = QUANTILE,
    max_prebins: int = 20,
    constraints: MergeConstraints = MergeConstraints(),
    smoothing: float = 0.5,
    good_label: int = 0,
) -> BinningModel:
    target = table.target_column()
    model = BinningModel(mode, smoothing, max_prebins, constraints, good_label)
    for c in table.columns:
        if c.kind is ColumnKind.TARGET:
            continue
        model.variables[c.name] = fit_variable(
            c, target, mode, max_prebins, constraints, smoothing, good_label
        )
    return model


def transform(table: Table, model: BinningModel) -> Table:
    """Replace every predictor cell by its bin's WoE.

    Out-of-range quantile values clamp to the edge bins by construction;
    unseen categorical values fall into the missing bin (logged).
    """
    cols = []
    unseen_total = 0
    for c in table.columns:
        if c.kind is ColumnKind.TARGET:
            cols.append(c)
            continue
        if c.name not in model.variables:
            raise DataError(f"no binning model for predictor {c.name}")
        vb = model.variables[c.name]
        values = np.empty(len(c))
        present = ~c.missing
        if vb.cat_values is not None:
            v = c.values[present]
            pos = np.searchsorted(vb.cat_values, v)
            pos_clip = np.minimum(pos, vb.cat_values.size - 1)
            seen = vb.cat_values[pos_clip] == v
            out = np.where(seen, vb.woe[vb.cat_bins[pos_clip]], vb.missing_woe)
            n_unseen = int((~seen).sum())
            if n_unseen:
                unseen_total += n_unseen
                log.warning("%s: %d unseen values mapped to the missing bin",
                            c.name, n_unseen)
            values[present] = out
        else:
            idx = np.searchsorted(vb.cuts, c.values[present], side="right")
            values[present] = vb.woe[idx]
        values[~present] = vb.missing_woe
        cols.append(Column(c.name, values, np.zeros(len(c), dtype=bool), c.kind))
    entry = f"woe_transform mode={model.mode} unseen={unseen_total}"
    return table.with_columns(cols, entry)


def select_by_iv(model: BinningModel, threshold: float = 0.1) -> set:
    """Variables whose IV strictly exceeds the threshold."""
    survivors = {name for name, vb in model.variables.items() if vb.iv > threshold}
    if not survivors:
        raise EmptySelectionError(
            f"no variable has IV > {threshold}", iv_table=model.iv_table()
        )
    return survivors


# -- manifest ---------------------------------------------------------------
def save_binning(model: BinningModel, path) -> None:
    """Audit manifest: WoE/IV printed at 6 decimals, hex fields alongside
    for exact replay."""
    c = model.constraints
    lines = [
        MANIFEST_VERSION,
        f"settings\tmode={model.mode}\tsmoothing={model.smoothing!r}"
        f"\tmax_prebins={model.max_prebins}\tmin_bin_frac={c.min_bin_frac!r}"
        f"\tmax_bins={c.max_bins}\tmonotonic={c.monotonic}"
        f"\tgood_label={model.good_label}",
    ]
    for name in sorted(model.variables):
        vb = model.variables[name]
        lines.append(
            f"variable\t{name}\tmode={vb.mode}\tn_bins={vb.n_bins}"
            f"\tiv={vb.iv:.6f}\tiv_hex={vb.iv.hex()}"
            f"\tmissing_good={vb.missing_good}\tmissing_bad={vb.missing_bad}"
            f"\tmissing_woe={vb.missing_woe:.6f}\tmissing_woe_hex={vb.missing_woe.hex()}"
            f"\tdirection={vb.direction}\tnote={vb.note}"
        )
        for k in range(vb.n_bins):
            lines.append(
                f"bin\t{name}\t{k}\tlo={float(vb.bin_lo[k])!r}\thi={float(vb.bin_hi[k])!r}"
                f"\tgood={vb.good[k]:.0f}\tbad={vb.bad[k]:.0f}"
                f"\twoe={vb.woe[k]:.6f}\twoe_hex={float(vb.woe[k]).hex()}"
            )
        if vb.cat_values is not None:
            vals = ",".join(repr(float(v)) for v in vb.cat_values)
            bins = ",".join(str(int(x)) for x in vb.cat_bins)
            lines.append(f"catmap\t{name}\t{vals}\t{bins}")
        else:
            cuts = ",".join(repr(float(v)) for v in vb.cuts)
            lines.append(f"cuts\t{name}\t{cuts}")
    Path(path).write_text("\n".join(lines) + "\n")


def _kv(parts):
    out = {}
    for part in parts:
        key, _, val = part.partition("=")
        out[key] = val
    return out


def load_binning(path) -> BinningModel:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != MANIFEST_VERSION:
        raise DataError(f"{path}: unsupported binning manifest")
    settings = _kv(lines[1].split("\t")[1:])
    model = BinningModel(
        settings["mode"],
        float(settings["smoothing"]),
        int(settings["max_prebins"]),
        MergeConstraints(
            float(settings["min_bin_frac"]),
            int(settings["max_bins"]),
            settings["monotonic"],
        ),
        int(settings["good_label"]),
    )
    pending = {}
    for line in lines[2:]:
        parts = line.split("\t")
        tag = parts[0]
        if tag == "variable":
            name = parts[1]
            kv = _kv(parts[2:])
            pending[name] = {
                "kv": kv,
                "lo": [], "hi": [], "good": [], "bad": [], "woe": [],
                "cuts": np.empty(0), "cat_values": None, "cat_bins": None,
            }
        elif tag == "bin":
            name = parts[1]
            kv = _kv(parts[3:])
            p = pending[name]
            p["lo"].append(float(kv["lo"]))
            p["hi"].append(float(kv["hi"]))
            p["good"].append(float(kv["good"]))
            p["bad"].append(float(kv["bad"]))
            p["woe"].append(float.fromhex(kv["woe_hex"]))
        elif tag == "cuts":
            name = parts[1]
            raw = parts[2] if len(parts) > 2 else ""
            pending[name]["cuts"] = np.array(
                [float(x) for x in raw.split(",") if x], dtype=np.float64
            )
        elif tag == "catmap":
            name = parts[1]
            pending[name]["cat_values"] = np.array(
                [float(x) for x in parts[2].split(",") if x]
            )
            pending[name]["cat_bins"] = np.array(
                [int(x) for x in parts[3].split(",") if x], dtype=np.int64
            )
        else:
            raise DataError(f"{path}: unknown manifest line {line!r}")
    for name, p in pending.items():
        kv = p["kv"]
        model.variables[name] = VariableBinning(
            name, kv["mode"], p["cuts"], p["cat_values"], p["cat_bins"],
            np.array(p["lo"]), np.array(p["hi"]),
            np.array(p["good"]), np.array(p["bad"]), np.array(p["woe"]),
            float.fromhex(kv["iv_hex"]),
            int(kv["missing_good"]), int(kv["missing_bad"]),
            float.fromhex(kv["missing_woe_hex"]),
            kv["direction"], kv.get("note", ""),
        )
    return model
