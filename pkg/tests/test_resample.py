import numpy as np
import pytest

from riskpipe.errors import ConfigError, DataError
from riskpipe.resample import RANDOM_OVER, SMOTE, ResamplePlan, random_oversample, resample, smote


def _imbalanced(rng, n_major=40, n_minor=12, d=4):
    X = rng.standard_normal((n_major + n_minor, d))
    y = np.array([0.0] * n_major + [1.0] * n_minor)
    return X, y


def test_plan_validation():
    with pytest.raises(ConfigError):
        ResamplePlan("downsample")
    with pytest.raises(ConfigError):
        ResamplePlan(SMOTE, target_ratio=0.5)


def test_random_oversample_counts(rng):
    X, y = _imbalanced(rng, 10, 5)
    X2, y2, _ = random_oversample(X, y, ResamplePlan(RANDOM_OVER, seed=1))
    assert (y2 == 1).sum() == (y2 == 0).sum() == 10
    # originals retained in order, synthetics appended
    assert np.array_equal(X2[:15], X)


def test_random_oversample_balanced_identity(rng):
    X, y = _imbalanced(rng, 8, 8)
    X2, y2, logrec = random_oversample(X, y, ResamplePlan(RANDOM_OVER, seed=1))
    assert np.array_equal(X2, X) and np.array_equal(y2, y)
    assert logrec.synthetic_from == []


def test_random_oversample_duplicates_bitwise(rng):
    X, y = _imbalanced(rng, 20, 7)
    X2, y2, logrec = random_oversample(X, y, ResamplePlan(RANDOM_OVER, seed=3))
    minority_rows = {X[i].tobytes() for i in range(27) if y[i] == 1}
    for row in X2[27:]:
        assert row.tobytes() in minority_rows


def test_single_class_errors(rng):
    X = rng.standard_normal((5, 2))
    with pytest.raises(DataError, match="both classes"):
        random_oversample(X, np.ones(5), ResamplePlan(RANDOM_OVER))


def test_smote_segment_geometry():
    X = np.array([[0.0, 0.0], [1.0, 1.0]] + [[5.0, -3.0]] * 6)
    y = np.array([1.0, 1.0] + [0.0] * 6)
    X2, y2, logrec = smote(X, y, ResamplePlan(SMOTE, seed=9, k_neighbors=1))
    synth = X2[8:]
    assert len(synth) == 4
    for row in synth:
        assert row[0] == pytest.approx(row[1], abs=1e-15)  # on the (u, u) segment
        assert 0.0 <= row[0] < 1.0


def test_smote_identical_minority_points(rng):
    X = np.vstack([np.tile([2.0, 3.0], (4, 1)), rng.standard_normal((9, 2))])
    y = np.array([1.0] * 4 + [0.0] * 9)
    X2, _, _ = smote(X, y, ResamplePlan(SMOTE, seed=2, k_neighbors=2))
    for row in X2[13:]:
        assert row.tolist() == [2.0, 3.0]


def test_smote_determinism_bytes(rng):
    X, y = _imbalanced(rng, 30, 9)
    a = smote(X, y, ResamplePlan(SMOTE, seed=11))
    b = smote(X.copy(), y.copy(), ResamplePlan(SMOTE, seed=11))
    assert a[0].tobytes() == b[0].tobytes()
    assert np.array_equal(a[1], b[1])
    assert a[2].synthetic_from == b[2].synthetic_from


def test_smote_replay_from_log(rng):
    X, y = _imbalanced(rng, 30, 9)
    plan = ResamplePlan(SMOTE, seed=5, k_neighbors=3)
    X2, y2, logrec = smote(X, y, plan)
    n = len(y)
    for offset, (a, b, u) in enumerate(logrec.synthetic_from):
        expected = X[a] + u * (X[b] - X[a])
        assert X2[n + offset].tobytes() == expected.tobytes()
        assert y[a] == 1.0 and y[b] == 1.0
        assert 0.0 <= u < 1.0


def test_smote_neighbors_are_near(rng):
    # every logged partner is among the source's k nearest minority rows
    X, y = _imbalanced(rng, 40, 10)
    plan = ResamplePlan(SMOTE, seed=8, k_neighbors=3)
    _, _, logrec = smote(X, y, plan)
    minority = np.flatnonzero(y == 1.0)
    mu, sd = X.mean(axis=0), X.std(axis=0)
    Z = (X - mu) / np.where(sd == 0, 1, sd)
    for a, b, _ in logrec.synthetic_from:
        d = ((Z[minority] - Z[a]) ** 2).sum(axis=1)
        d[minority == a] = np.inf
        kth = np.sort(d)[2]
        db = ((Z[b] - Z[a]) ** 2).sum()
        assert db <= kth + 1e-12


def test_smote_counts_within_one(rng):
    for n_minor in (5, 9, 14):
        X, y = _imbalanced(rng, 33, n_minor)
        X2, y2, _ = smote(X, y, ResamplePlan(SMOTE, seed=0))
        assert abs((y2 == 1).sum() - (y2 == 0).sum()) <= 1


def test_smote_k_reduction_logged(rng):
    X, y = _imbalanced(rng, 20, 4)
    X2, y2, logrec = smote(X, y, ResamplePlan(SMOTE, seed=1, k_neighbors=5))
    assert any("k reduced to 3" in note for note in logrec.notes)
    assert (y2 == 1).sum() == 20


def test_smote_single_minority_falls_back(rng):
    X, y = _imbalanced(rng, 10, 1)
    X2, y2, logrec = smote(X, y, ResamplePlan(SMOTE, seed=1))
    assert any("fell back" in note for note in logrec.notes)
    assert (y2 == 1).sum() == 10
    assert all(row.tobytes() == X[10].tobytes() for row in X2[11:])


def test_resample_none_passthrough(rng):
    X, y = _imbalanced(rng, 6, 3)
    X2, y2, logrec = resample(X, y, ResamplePlan("none"))
    assert np.array_equal(X2, X)
    assert logrec.strategy == "none"
