import numpy as np
import pytest

from riskpipe.errors import DataError
from riskpipe.evaluate import roc_auc
from riskpipe.learners import (
    GbtParams,
    LogRegParams,
    load_model,
    log_loss,
    logreg_objective,
    predict_proba,
    save_model,
    sigmoid,
    train_gbt,
    train_logreg,
)


def test_logreg_separable_converges():
    x = np.linspace(-2, 2, 40).reshape(-1, 1)
    y = (x[:, 0] > 0).astype(float)
    model = train_logreg(x, y, LogRegParams(l2=1e-3))
    p = predict_proba(model, x)
    assert (((p >= 0.5) == (y == 1)).mean()) == 1.0
    assert np.isfinite(model.coef).all()


def test_logreg_coinflip_recovers_base_rate(rng):
    X = rng.standard_normal((20000, 3))
    y = (rng.random(20000) < 0.3).astype(float)
    model = train_logreg(X, y)
    base = np.log(y.mean() / (1 - y.mean()))
    assert model.intercept == pytest.approx(base, abs=0.05)
    assert np.abs(model.coef).max() < 0.05


def test_logreg_gradient_vs_finite_differences(rng):
    for trial in range(20):
        n, p = 60, 5
        X = rng.standard_normal((n, p))
        y = (rng.random(n) < 0.5).astype(float)
        X1 = np.hstack([np.ones((n, 1)), X])
        beta = rng.standard_normal(p + 1) * 0.5
        l2 = 10.0 ** rng.uniform(-5, -2)
        loss, grad = logreg_objective(beta, X1, y, l2)
        eps = 1e-6
        for j in range(p + 1):
            e = np.zeros(p + 1)
            e[j] = eps
            lp, _ = logreg_objective(beta + e, X1, y, l2)
            lm, _ = logreg_objective(beta - e, X1, y, l2)
            fd = (lp - lm) / (2 * eps)
            denom = max(abs(fd), abs(grad[j]), 1e-8)
            assert abs(grad[j] - fd) / denom < 1e-6


def test_logreg_loss_trace_non_increasing(rng):
    X = rng.standard_normal((500, 4))
    y = (X[:, 0] + 0.5 * rng.standard_normal(500) > 0).astype(float)
    model = train_logreg(X, y)
    trace = np.array(model.loss_trace)
    assert (np.diff(trace) <= 0).all()


def test_logreg_newton_direction_solves_system(rng):
    # after convergence the gradient max-norm is below tol
    X = rng.standard_normal((800, 3))
    y = (X @ np.array([1.0, -2.0, 0.5]) + rng.standard_normal(800) > 0).astype(float)
    params = LogRegParams(l2=1e-3, tol=1e-8)
    model = train_logreg(X, y, params)
    X1 = np.hstack([np.ones((800, 1)), X])
    beta = np.concatenate(([model.intercept], model.coef))
    _, grad = logreg_objective(beta, X1, y, params.l2)
    assert np.abs(grad).max() < 1e-6


def _hand_fixture():
    X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    y = np.array([0.0, 0.0, 1.0, 1.0])
    return X, y


def test_gbt_hand_fixture_depth1():
    # base = logit(0.5) = 0, p = 0.5: g = +-0.5, h = 0.25
    # feature 0 split: GL = 1, HL = 0.5 -> gain = 0.5*(2 + 2 - 0) = 2
    # leaf weights -GL/HL = -2 and +2
    X, y = _hand_fixture()
    model = train_gbt(
        X, y,
        GbtParams(n_trees=1, max_depth=1, learning_rate=0.1,
                  reg_lambda=0.0, gamma=0.0, min_child_weight=0.0),
    )
    assert model.base_score == 0.0
    tree = model.trees[0]
    assert tree.feat[0] == 0
    assert tree.thr[0] == pytest.approx(0.5, abs=1e-10)
    left, right = tree.left[0], tree.right[0]
    assert tree.weight[left] == pytest.approx(-2.0, abs=1e-10)
    assert tree.weight[right] == pytest.approx(2.0, abs=1e-10)
    assert tree.gsum[left] == pytest.approx(1.0, abs=1e-10)
    assert tree.hsum[left] == pytest.approx(0.5, abs=1e-10)


def test_gbt_gamma_blocks_split():
    X, y = _hand_fixture()
    model = train_gbt(
        X, y,
        GbtParams(n_trees=3, max_depth=2, learning_rate=0.1,
                  reg_lambda=0.0, gamma=10.0, min_child_weight=0.0),
    )
    for tree in model.trees:
        assert tree.n_nodes == 1 and tree.feat[0] == -1
    p = predict_proba(model, X)
    assert np.allclose(p, 0.5)


def test_gbt_loss_non_increasing_200_rounds(rng):
    X = rng.standard_normal((400, 5))
    y = ((X[:, 0] > 0) ^ (X[:, 1] > 0)).astype(float)
    model = train_gbt(X, y, GbtParams(n_trees=200, max_depth=3))
    trace = np.array(model.loss_trace)
    assert len(trace) == 201
    assert (np.diff(trace) <= 1e-12).all()


def test_gbt_leaf_weight_audit(rng):
    X = rng.standard_normal((300, 4))
    y = (X[:, 0] + rng.standard_normal(300) > 0).astype(float)
    params = GbtParams(n_trees=20, max_depth=3, reg_lambda=1.3)
    model = train_gbt(X, y, params)
    for tree in model.trees:
        leaves = tree.feat < 0
        recomputed = -tree.gsum[leaves] / (tree.hsum[leaves] + params.reg_lambda)
        assert np.array_equal(recomputed, tree.weight[leaves])


def test_gbt_deterministic(rng):
    X = rng.standard_normal((200, 4))
    y = (rng.random(200) < 0.4).astype(float)
    m1 = train_gbt(X, y, GbtParams(n_trees=10, max_depth=3))
    m2 = train_gbt(X.copy(), y.copy(), GbtParams(n_trees=10, max_depth=3))
    for t1, t2 in zip(m1.trees, m2.trees):
        assert np.array_equal(t1.thr, t2.thr)
        assert np.array_equal(t1.weight, t2.weight)


def test_predict_trivial_models(rng):
    from riskpipe.learners import GbtModel, LogRegModel

    X = rng.standard_normal((7, 2))
    lr = LogRegModel(0.0, np.zeros(2), 0.0)
    assert np.allclose(predict_proba(lr, X), 0.5)
    gbt = GbtModel(0.3, [], GbtParams(), 2)
    assert np.allclose(predict_proba(gbt, X), sigmoid(np.array([0.3]))[0])


def test_predict_monotone_single_feature():
    x = np.linspace(-3, 3, 50).reshape(-1, 1)
    from riskpipe.learners import LogRegModel

    model = LogRegModel(0.1, np.array([0.8]), 0.0)
    p = predict_proba(model, x)
    assert (np.diff(p) > 0).all()
    assert ((p > 0) & (p < 1)).all()


def test_predict_feature_mismatch(rng):
    X = rng.standard_normal((30, 3))
    y = (rng.random(30) < 0.5).astype(float)
    y[0], y[1] = 0.0, 1.0
    lr = train_logreg(X, y)
    gbt = train_gbt(X, y, GbtParams(n_trees=2, max_depth=2))
    with pytest.raises(DataError, match="mismatch"):
        predict_proba(lr, X[:, :2])
    with pytest.raises(DataError, match="mismatch"):
        predict_proba(gbt, X[:, :2])


def test_learner_gap_mechanism(rng):
    # log-odds-linear task: logreg at least matches the trees;
    # xor interactions: the trees win by a wide margin
    n = 4000
    X = rng.standard_normal((n, 4))
    z_lin = 2.0 * X[:, 0] - 1.5 * X[:, 1]
    y_lin = (rng.random(n) < 1 / (1 + np.exp(-z_lin))).astype(float)
    tr = np.arange(n) < 3000
    lr = train_logreg(X[tr], y_lin[tr])
    gbt = train_gbt(X[tr], y_lin[tr], GbtParams(n_trees=100, max_depth=4))
    _, auc_lr = roc_auc(predict_proba(lr, X[~tr]), y_lin[~tr])
    _, auc_gbt = roc_auc(predict_proba(gbt, X[~tr]), y_lin[~tr])
    assert auc_lr >= auc_gbt - 1.0  # percent scale

    y_xor = (((X[:, 0] > 0) ^ (X[:, 1] > 0)) & (rng.random(n) < 0.95)).astype(float)
    lr = train_logreg(X[tr], y_xor[tr])
    gbt = train_gbt(X[tr], y_xor[tr], GbtParams(n_trees=100, max_depth=4))
    _, auc_lr = roc_auc(predict_proba(lr, X[~tr]), y_xor[~tr])
    _, auc_gbt = roc_auc(predict_proba(gbt, X[~tr]), y_xor[~tr])
    assert auc_gbt - auc_lr >= 15.0  # percent scale


def test_model_serialization_round_trip(tmp_path, rng):
    X = rng.standard_normal((150, 3))
    y = (X[:, 0] > 0.2).astype(float)
    lr = train_logreg(X, y)
    save_model(lr, tmp_path / "lr.txt")
    lr2 = load_model(tmp_path / "lr.txt")
    assert lr2.intercept == lr.intercept
    assert np.array_equal(lr2.coef, lr.coef)
    assert lr2.loss_trace == lr.loss_trace
    assert predict_proba(lr2, X).tobytes() == predict_proba(lr, X).tobytes()

    gbt = train_gbt(X, y, GbtParams(n_trees=5, max_depth=3))
    save_model(gbt, tmp_path / "gbt.txt")
    gbt2 = load_model(tmp_path / "gbt.txt")
    assert gbt2.base_score == gbt.base_score
    assert gbt2.n_features == 3
    for t1, t2 in zip(gbt.trees, gbt2.trees):
        for f in ("feat", "thr", "left", "right", "weight", "gsum", "hsum", "count"):
            assert np.array_equal(getattr(t1, f), getattr(t2, f))
    assert predict_proba(gbt2, X).tobytes() == predict_proba(gbt, X).tobytes()


def test_log_loss_clamps():
    y = np.array([1.0, 0.0])
    assert np.isfinite(log_loss(y, np.array([0.0, 1.0])))
