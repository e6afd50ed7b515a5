"""The two classifiers compared throughout: logistic regression trained
by Newton steps with step-halving, and second-order gradient-boosted
regression trees (exact greedy splits, shrinkage, L2 leaf smoothing).

Both are fully deterministic: identical inputs and hyperparameters give
byte-identical models. Split ties in the trees resolve to the smallest
feature index, then the smallest threshold.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .errors import ConfigError, DataError

MODEL_VERSION = "riskpipe-model v1"

PROB_CLAMP = 1e-12


@dataclass(frozen=True)
class LogRegParams:
    l2: float = 1e-4
    max_iter: int = 100
    tol: float = 1e-8

    def __post_init__(self):
        if self.l2 < 0 or self.max_iter < 1 or self.tol <= 0:
            raise ConfigError(f"invalid logreg hyperparameters: {self}")


@dataclass(frozen=True)
class GbtParams:
    n_trees: int = 200
    max_depth: int = 4
    learning_rate: float = 0.1
    reg_lambda: float = 1.0
    gamma: float = 0.0
    min_child_weight: float = 1.0

    def __post_init__(self):
        if (
            self.n_trees < 0
            or self.max_depth < 1
            or self.learning_rate <= 0
            or self.reg_lambda < 0
            or self.gamma < 0
            or self.min_child_weight < 0
        ):
            raise ConfigError(f"invalid gbt hyperparameters: {self}")


@dataclass
class LogRegModel:
    intercept: float
    coef: np.ndarray
    l2: float
    loss_trace: list = field(default_factory=list)


@dataclass(frozen=True)
class Tree:
    feat: np.ndarray
    thr: np.ndarray
    left: np.ndarray
    right: np.ndarray
    weight: np.ndarray  # raw -G/(H+lambda); learning rate applied outside
    gsum: np.ndarray
    hsum: np.ndarray
    count: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feat.size


@dataclass
class GbtModel:
    base_score: float
    trees: list
    params: GbtParams
    n_features: int = 0
    loss_trace: list = field(default_factory=list)


def sigmoid(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def log_loss(y: np.ndarray, p: np.ndarray) -> float:
    p = np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def _check_xy(X, y):
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.size:
        raise DataError("X must be (n, p) with a matching y")
    if not np.isfinite(X).all():
        raise DataError("X contains non-finite values")
    if not np.isin(y, (0.0, 1.0)).all():
        raise DataError("y must be binary 0/1")
    return X, y


def logreg_objective(beta: np.ndarray, X1: np.ndarray, y: np.ndarray, l2: float):
    """Mean log-loss plus (l2/2)||coef||^2, intercept unpenalized; returns
    (loss, gradient). beta[0] is the intercept, X1 carries a ones column."""
    p = sigmoid(X1 @ beta)
    penalty = np.concatenate(([0.0], beta[1:]))
    loss = log_loss(y, p) + 0.5 * l2 * float(beta[1:] @ beta[1:])
    grad = X1.T @ (p - y) / y.size + l2 * penalty
    return loss, grad


def train_logreg(X, y, params: LogRegParams = LogRegParams()) -> LogRegModel:
    X, y = _check_xy(X, y)
    n, p = X.shape
    X1 = np.hstack([np.ones((n, 1)), X])
    beta = np.zeros(p + 1)
    loss, grad = logreg_objective(beta, X1, y, params.l2)
    trace = [loss]
    reg = params.l2 * np.ones(p + 1)
    reg[0] = 0.0
    for it in range(params.max_iter):
        if float(np.abs(grad).max()) < params.tol:
            break
        pr = sigmoid(X1 @ beta)
        w = pr * (1.0 - pr) / n
        H = X1.T @ (X1 * w[:, None]) + np.diag(reg)
        try:
            step = np.linalg.solve(H, grad)
        except np.linalg.LinAlgError:
            H = H + 1e-10 * np.eye(p + 1)
            step = np.linalg.solve(H, grad)
        # halve until the loss decreases (max 30 halvings); if nothing
        # helps we are at numerical convergence and stop moving
        t = 1.0
        accepted = False
        for _ in range(31):
            cand = beta - t * step
            cand_loss, cand_grad = logreg_objective(cand, X1, y, params.l2)
            if np.isfinite(cand_loss) and cand_loss <= trace[-1]:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        beta, loss, grad = cand, cand_loss, cand_grad
        if not np.isfinite(loss):
            raise DataError(f"logreg loss became non-finite at iteration {it}")
        trace.append(loss)
    return LogRegModel(float(beta[0]), beta[1:].copy(), params.l2, trace)


def sorted_feature_order(X: np.ndarray) -> np.ndarray:
    """Per-feature row ids sorted by value (stable, so ties keep row order)."""
    n, p = X.shape
    order = np.empty((p, n), dtype=np.int64)
    for f in range(p):
        order[f] = np.argsort(X[:, f], kind="stable")
    return order


def train_gbt(X, y, params: GbtParams = GbtParams()) -> GbtModel:
    X, y = _check_xy(X, y)
    mean = float(np.clip(y.mean(), PROB_CLAMP, 1.0 - PROB_CLAMP))
    base = float(np.log(mean / (1.0 - mean)))
    n = X.shape[0]
    margins = np.full(n, base)
    order = sorted_feature_order(X)
    trees = []
    trace = [log_loss(y, sigmoid(margins))]
    for _ in range(params.n_trees):
        pr = sigmoid(margins)
        g = pr - y
        h = pr * (1.0 - pr)
        arrays = kernels.grow_tree(
            X, order, g, h,
            params.max_depth, params.reg_lambda, params.gamma, params.min_child_weight,
        )
        tree = Tree(*arrays)
        trees.append(tree)
        margins = margins + params.learning_rate * kernels.tree_margin(
            tree.feat, tree.thr, tree.left, tree.right, tree.weight, X
        )
        trace.append(log_loss(y, sigmoid(margins)))
    return GbtModel(base, trees, params, X.shape[1], trace)


def gbt_margin(model: GbtModel, X: np.ndarray) -> np.ndarray:
    margins = np.full(X.shape[0], model.base_score)
    for tree in model.trees:
        margins = margins + model.params.learning_rate * kernels.tree_margin(
            tree.feat, tree.thr, tree.left, tree.right, tree.weight, X
        )
    return margins


def predict_proba(model, X) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DataError("predict_proba needs a (n, p) matrix")
    if isinstance(model, LogRegModel):
        if X.shape[1] != model.coef.size:
            raise DataError(
                f"feature count mismatch: model has {model.coef.size}, X has {X.shape[1]}"
            )
        z = model.intercept + X @ model.coef
    elif isinstance(model, GbtModel):
        if X.shape[1] != model.n_features:
            raise DataError(
                f"feature count mismatch: model trained on {model.n_features} "
                f"features, X has {X.shape[1]}"
            )
        z = gbt_margin(model, X)
    else:
        raise DataError(f"unknown model type {type(model).__name__}")
    return np.clip(sigmoid(z), PROB_CLAMP, 1.0 - PROB_CLAMP)


# -- serialization -----------------------------------------------------------
def save_model(model, path) -> None:
    lines = [MODEL_VERSION]
    if isinstance(model, LogRegModel):
        lines.append("kind\tlogreg")
        lines.append(f"l2\t{model.l2!r}")
        lines.append(f"intercept\t{model.intercept!r}")
        lines.append("coef\t" + ",".join(repr(float(c)) for c in model.coef))
        lines.append("trace\t" + ",".join(repr(float(v)) for v in model.loss_trace))
    elif isinstance(model, GbtModel):
        p = model.params
        lines.append("kind\tgbt")
        lines.append(
            f"params\tn_trees={p.n_trees}\tmax_depth={p.max_depth}"
            f"\tlearning_rate={p.learning_rate!r}\treg_lambda={p.reg_lambda!r}"
            f"\tgamma={p.gamma!r}\tmin_child_weight={p.min_child_weight!r}"
        )
        lines.append(f"base_score\t{model.base_score!r}")
        lines.append(f"n_features\t{model.n_features}")
        lines.append("trace\t" + ",".join(repr(float(v)) for v in model.loss_trace))
        for t, tree in enumerate(model.trees):
            lines.append(f"tree\t{t}\tnodes\t{tree.n_nodes}")
            for i in range(tree.n_nodes):
                lines.append(
                    f"node\t{t}\t{i}\t{int(tree.feat[i])}\t{float(tree.thr[i])!r}"
                    f"\t{int(tree.left[i])}\t{int(tree.right[i])}"
                    f"\t{float(tree.weight[i])!r}\t{float(tree.gsum[i])!r}"
                    f"\t{float(tree.hsum[i])!r}\t{int(tree.count[i])}"
                )
    else:
        raise DataError(f"cannot serialize {type(model).__name__}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_model(path):
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != MODEL_VERSION:
        raise DataError(f"{path}: unsupported model format")
    fields = {}
    tree_nodes = {}
    for line in lines[1:]:
        parts = line.split("\t")
        if parts[0] == "tree":
            tree_nodes[int(parts[1])] = []
        elif parts[0] == "node":
            tree_nodes[int(parts[1])].append(parts[2:])
        elif parts[0] == "params":
            fields["params"] = {
                k: v for k, v in (kv.partition("=")[::2] for kv in parts[1:])
            }
        else:
            fields[parts[0]] = parts[1] if len(parts) > 1 else ""
    kind = fields.get("kind")
    trace = [float(v) for v in fields.get("trace", "").split(",") if v]
    if kind == "logreg":
        coef = np.array([float(v) for v in fields["coef"].split(",") if v])
        return LogRegModel(float(fields["intercept"]), coef, float(fields["l2"]), trace)
    if kind == "gbt":
        pf = fields["params"]
        params = GbtParams(
            int(pf["n_trees"]), int(pf["max_depth"]), float(pf["learning_rate"]),
            float(pf["reg_lambda"]), float(pf["gamma"]), float(pf["min_child_weight"]),
        )
        trees = []
        for t in sorted(tree_nodes):
            rows = tree_nodes[t]
            feat = np.array([int(r[1]) for r in rows], dtype=np.int64)
            thr = np.array([float(r[2]) for r in rows])
            left = np.array([int(r[3]) for r in rows], dtype=np.int64)
            right = np.array([int(r[4]) for r in rows], dtype=np.int64)
            weight = np.array([float(r[5]) for r in rows])
            gsum = np.array([float(r[6]) for r in rows])
            hsum = np.array([float(r[7]) for r in rows])
            count = np.array([int(r[8]) for r in rows], dtype=np.int64)
            trees.append(Tree(feat, thr, left, right, weight, gsum, hsum, count))
        return GbtModel(
            float(fields["base_score"]), trees, params,
            int(fields.get("n_features", 0)), trace,
        )
    raise DataError(f"{path}: unknown model kind {kind!r}")
