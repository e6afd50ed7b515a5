import itertools
import math

import numpy as np
import pytest

from riskpipe.binning import (
    CATEGORICAL,
    QUANTILE,
    BinningModel,
    MergeConstraints,
    PreBins,
    fit_binning,
    fit_variable,
    load_binning,
    optimal_merge,
    prebin,
    save_binning,
    select_by_iv,
    transform,
    woe_iv,
)
from riskpipe.errors import ConfigError, DataError, EmptySelectionError

from conftest import make_column, make_table


# -- independent oracle --------------------------------------------------------
def oracle_term(gi, bi, G, B):
    gs = gi / G
    bs = bi / B
    gl = (gi if gi > 0.0 else 0.5) / G
    bl = (bi if bi > 0.0 else 0.5) / B
    return (gs - bs) * math.log(gl / bl)


def oracle_best_partition(good, bad, constraints):
    """Exhaustive contiguous-partition search, mirroring the DP's
    arithmetic order (left-to-right sum of per-bin terms)."""
    n = len(good)
    G = float(sum(good))
    B = float(sum(bad))
    total = G + B
    best = None

    def directions():
        if constraints.monotonic == "none":
            return ["none"]
        return ["non_decreasing", "non_increasing"]

    for k in range(1, constraints.max_bins + 1):
        for cuts in itertools.combinations(range(1, n), k - 1):
            cc = (0,) + cuts + (n,)
            parts = [(cc[i], cc[i + 1]) for i in range(k)]
            gg = [float(sum(good[lo:hi])) for lo, hi in parts]
            bb = [float(sum(bad[lo:hi])) for lo, hi in parts]
            rows = [g + b for g, b in zip(gg, bb)]
            if any(r < constraints.min_bin_frac * total for r in rows):
                continue
            rates = [b / r for b, r in zip(bb, rows)]
            ok_dir = False
            for d in directions():
                if d == "none":
                    ok_dir = True
                elif d == "non_decreasing":
                    ok_dir = ok_dir or all(
                        rates[i] <= rates[i + 1] for i in range(k - 1)
                    )
                else:
                    ok_dir = ok_dir or all(
                        rates[i] >= rates[i + 1] for i in range(k - 1)
                    )
            if not ok_dir:
                continue
            iv = 0.0
            for g, b in zip(gg, bb):
                iv = iv + oracle_term(g, b, G, B)
            if best is None or iv > best:
                best = iv
    return best


def _prebins_from_counts(good, bad):
    n = len(good)
    return PreBins(
        QUANTILE,
        np.arange(n, dtype=float),
        np.arange(n + 1),
        np.asarray(good, dtype=float),
        np.asarray(bad, dtype=float),
    )


# -- prebin ---------------------------------------------------------------------
def test_prebin_equal_frequency():
    col = make_column("v", list(range(100)))
    target = make_column("t", [i % 2 for i in range(100)])
    pb = prebin(col, target, QUANTILE, max_prebins=20)
    assert pb.n_prebins == 20
    assert pb.rows.tolist() == [5.0] * 20


def test_prebin_categorical_small():
    col = make_column("v", [0, 1, 2, 0, 1, 2])
    target = make_column("t", [0, 1, 0, 1, 0, 1])
    pb = prebin(col, target, CATEGORICAL)
    assert pb.n_prebins == 3
    assert pb.mode == CATEGORICAL


def test_prebin_categorical_collapse():
    col = make_column("v", list(range(50)))
    target = make_column("t", [i % 2 for i in range(50)])
    pb = prebin(col, target, CATEGORICAL, max_prebins=20)
    assert pb.mode == QUANTILE
    assert "collapsed" in pb.note


def test_prebin_constant_target_ok():
    col = make_column("v", list(range(30)))
    target = make_column("t", [0] * 30)
    pb = prebin(col, target, QUANTILE)
    assert pb.bad.sum() == 0
    merged = optimal_merge(pb)
    assert merged.n_bins == 1
    with pytest.raises(DataError, match="degenerate"):
        woe_iv(merged.good, merged.bad)


def test_prebin_non_binary_target():
    col = make_column("v", [1, 2, 3])
    target = make_column("t", [0, 1, 2])
    with pytest.raises(DataError, match="binary"):
        prebin(col, target)


def test_prebin_missing_cells_counted():
    col = make_column("v", [1, 2, None, 3, None])
    target = make_column("t", [0, 0, 0, 1, 1])
    pb = prebin(col, target, QUANTILE, good_label=0)
    assert (pb.missing_good, pb.missing_bad) == (1, 1)


# -- optimal_merge ----------------------------------------------------------------
def test_merge_two_bin_hand_case():
    pb = _prebins_from_counts([30, 10], [10, 30])
    merged = optimal_merge(pb, MergeConstraints(0.05, 2, "none"))
    assert merged.groups == ((0, 1), (1, 2))
    assert merged.objective_iv == pytest.approx(
        (0.75 - 0.25) * math.log(3) + (0.25 - 0.75) * math.log(1 / 3), abs=1e-12
    )


def test_merge_identical_rates_single_bin():
    pb = _prebins_from_counts([30, 10, 20], [30, 10, 20])
    for mono in ("none", "auto"):
        merged = optimal_merge(pb, MergeConstraints(monotonic=mono))
        assert merged.groups == ((0, 3),)
        assert merged.objective_iv == 0.0


def test_merge_single_prebin():
    pb = _prebins_from_counts([30], [10])
    assert optimal_merge(pb).groups == ((0, 1),)


def test_merge_min_frac_constraint():
    # tiny last prebin cannot stand alone at min_bin_frac=0.25
    pb = _prebins_from_counts([40, 40, 2], [40, 4, 2])
    merged = optimal_merge(pb, MergeConstraints(0.25, 10, "none"))
    total = 128.0
    for lo, hi in merged.groups:
        rows = (pb.good[lo:hi] + pb.bad[lo:hi]).sum()
        assert rows >= 0.25 * total


def test_merge_oversized_min_frac_forces_single_bin():
    # any min_bin_frac above 0.5 rules out every multi-bin partition;
    # the single merged bin is the only (and returned) feasible answer
    pb = _prebins_from_counts([5, 25], [25, 5])
    merged = optimal_merge(pb, MergeConstraints(0.9, 10, "none"))
    assert merged.n_bins == 1
    assert optimal_merge(pb, MergeConstraints(1.0, 10, "none")).n_bins == 1


@pytest.mark.parametrize("seed", range(12))
def test_dp_equals_bruteforce(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 9))
    good = rng.integers(0, 40, n).astype(float)
    bad = rng.integers(0, 40, n).astype(float)
    if good.sum() == 0 or bad.sum() == 0:
        good[0] += 1
        bad[-1] += 1
    mono = ["none", "auto"][seed % 2]
    cons = MergeConstraints(
        min_bin_frac=float(rng.choice([0.0, 0.05, 0.2])),
        max_bins=int(rng.integers(1, n + 2)),
        monotonic=mono,
    )
    merged = optimal_merge(_prebins_from_counts(good, bad), cons)
    expected = oracle_best_partition(good, bad, cons)
    assert merged.objective_iv == expected  # bit-equal


def test_merge_local_optimality(rng):
    good = rng.integers(1, 50, 8).astype(float)
    bad = rng.integers(1, 50, 8).astype(float)
    pb = _prebins_from_counts(good, bad)
    merged = optimal_merge(pb, MergeConstraints(0.0, 8, "none"))
    G, B = good.sum(), bad.sum()
    for i in range(merged.n_bins - 1):
        lo1, hi1 = merged.groups[i]
        lo2, hi2 = merged.groups[i + 1]
        split_iv = oracle_term(
            float(good[lo1:hi1].sum()), float(bad[lo1:hi1].sum()), G, B
        ) + oracle_term(float(good[lo2:hi2].sum()), float(bad[lo2:hi2].sum()), G, B)
        merged_iv = oracle_term(
            float(good[lo1:hi2].sum()), float(bad[lo1:hi2].sum()), G, B
        )
        assert merged_iv <= split_iv + 1e-12


def test_merge_monotonic_direction():
    # increasing event rate across prebins: auto must return ordered rates
    pb = _prebins_from_counts([40, 30, 20, 10], [10, 20, 30, 40])
    merged = optimal_merge(pb, MergeConstraints(0.0, 4, "auto"))
    rates = [
        float(pb.bad[lo:hi].sum() / (pb.good[lo:hi] + pb.bad[lo:hi]).sum())
        for lo, hi in merged.groups
    ]
    assert rates == sorted(rates)
    assert merged.direction == "non_decreasing"


# -- woe_iv ----------------------------------------------------------------------
def test_woe_single_bin_zero():
    woe, iv = woe_iv(np.array([10.0]), np.array([20.0]), smoothing=0.0)
    assert woe.tolist() == [0.0]
    assert iv == 0.0


def test_woe_hand_case_unsmoothed():
    woe, iv = woe_iv(np.array([50.0, 50.0]), np.array([25.0, 75.0]), smoothing=0.0)
    assert woe[0] == pytest.approx(math.log(2), abs=1e-12)
    assert woe[1] == pytest.approx(math.log(2 / 3), abs=1e-12)
    assert iv == pytest.approx(0.2746, abs=1e-4)


def test_woe_smoothing_keeps_finite():
    woe, iv = woe_iv(np.array([10.0, 5.0]), np.array([8.0, 0.0]), smoothing=0.5)
    assert np.isfinite(woe).all()
    assert np.isfinite(iv) and iv >= 0.0


def test_woe_degenerate_errors():
    with pytest.raises(DataError):
        woe_iv(np.array([5.0, 5.0]), np.array([0.0, 0.0]))


def test_woe_shares_sum_to_one_and_iv_nonnegative(rng):
    for _ in range(20):
        g = rng.integers(0, 30, 6).astype(float)
        b = rng.integers(0, 30, 6).astype(float)
        g[0] += 1
        b[1] += 1
        s = 0.5
        G, B = g.sum(), b.sum()
        gs = (g + s) / (G + s * 6)
        bs = (b + s) / (B + s * 6)
        assert gs.sum() == pytest.approx(1.0, abs=1e-12)
        assert bs.sum() == pytest.approx(1.0, abs=1e-12)
        _, iv = woe_iv(g, b, s)
        assert iv >= 0.0


# -- fit/transform/select ----------------------------------------------------------
def _fitted_model(rng, n=400, mode=QUANTILE):
    x = rng.standard_normal(n)
    noise = rng.standard_normal(n)
    y = (x + 0.8 * noise > 0).astype(float)
    t = make_table(v=list(x), u=list(rng.standard_normal(n)), target=list(y))
    return t, fit_binning(t, mode=mode, good_label=0)


def test_transform_values_and_clamping(rng):
    t, model = _fitted_model(rng)
    vb = model.variables["v"]
    out = transform(t, model)
    woe_vals = set(np.round(out.column("v").values, 12))
    assert woe_vals <= set(np.round(vb.woe, 12))
    assert len(woe_vals) <= model.constraints.max_bins
    # out-of-range values clamp to the edge bins
    extreme = make_table(v=[-1e9, 1e9], u=[0.0, 0.0], target=[0, 1])
    out2 = transform(extreme, model)
    assert out2.column("v").values[0] == vb.woe[0]
    assert out2.column("v").values[1] == vb.woe[-1]


def test_transform_idempotent_on_representatives(rng):
    t, model = _fitted_model(rng)
    out1 = transform(t, model)
    out2 = transform(out1, model)
    vb = model.variables["v"]
    # transforming already-transformed values maps each woe to a woe
    assert set(np.round(out2.column("v").values, 12)) <= set(np.round(vb.woe, 12))


def test_transform_unseen_categorical_gets_missing_woe(rng):
    x = list(rng.integers(0, 6, 300).astype(float))
    y = [(int(v) in (0, 1, 2)) * 1.0 for v in x]
    t = make_table(v=x, target=y)
    model = fit_binning(t, mode=CATEGORICAL, good_label=0)
    fresh = make_table(v=[99.0, 2.0], target=[0, 1])
    out = transform(fresh, model)
    assert out.column("v").values[0] == model.variables["v"].missing_woe


def test_transform_missing_cells_get_missing_bin(rng):
    x = [None if i % 7 == 0 else float(i % 11) for i in range(220)]
    y = [float((i % 11) > 5 or i % 7 == 0) for i in range(220)]
    t = make_table(v=x, target=y)
    model = fit_binning(t, mode=QUANTILE, good_label=0)
    vb = model.variables["v"]
    assert vb.missing_good + vb.missing_bad > 0
    out = transform(t, model)
    got = out.column("v").values[t.column("v").missing]
    assert (got == vb.missing_woe).all()


def test_iv_invariant_under_monotone_transform(rng):
    x = rng.standard_normal(300)
    y = (x + rng.standard_normal(300) > 0).astype(float)
    t1 = make_table(v=list(x), target=list(y))
    t2 = make_table(v=list(np.exp(x)), target=list(y))
    m1 = fit_binning(t1, mode=QUANTILE, good_label=0)
    m2 = fit_binning(t2, mode=QUANTILE, good_label=0)
    assert m1.variables["v"].iv == pytest.approx(m2.variables["v"].iv, abs=1e-12)


def test_select_by_iv_strict():
    model = BinningModel(QUANTILE, 0.5, 20, MergeConstraints(), 0)

    class FakeVB:
        def __init__(self, iv):
            self.iv = iv

    model.variables = {"a": FakeVB(0.25), "b": FakeVB(0.10), "c": FakeVB(0.05)}
    assert select_by_iv(model, 0.1) == {"a"}
    model.variables = {"a": FakeVB(0.0), "b": FakeVB(0.0)}
    with pytest.raises(EmptySelectionError) as exc:
        select_by_iv(model, 0.1)
    assert exc.value.iv_table == {"a": 0.0, "b": 0.0}


def test_constraints_validation():
    with pytest.raises(ConfigError):
        MergeConstraints(min_bin_frac=-0.1)
    with pytest.raises(ConfigError):
        MergeConstraints(max_bins=0)
    with pytest.raises(ConfigError):
        MergeConstraints(monotonic="up")


def test_manifest_round_trip(tmp_path, rng):
    t, model = _fitted_model(rng, mode=QUANTILE)
    save_binning(model, tmp_path / "bins.txt")
    text = (tmp_path / "bins.txt").read_text()
    assert text.startswith("riskpipe-binning v1")
    back = load_binning(tmp_path / "bins.txt")
    vb0 = model.variables["v"]
    vb1 = back.variables["v"]
    assert np.array_equal(vb0.woe, vb1.woe)
    assert vb0.iv == vb1.iv
    assert np.array_equal(vb0.cuts, vb1.cuts)
    out0 = transform(t, model)
    out1 = transform(t, back)
    assert out0.column("v").values.tobytes() == out1.column("v").values.tobytes()
