"""Variable clustering, representative picking, PoV-based count selection
and iterative VIF reduction.

Clustering is divisive: starting from one all-variable cluster, the
cluster with the largest second eigenvalue above the split threshold is
split along its top two principal components, followed by local
reassignment passes to a fixed point. Every correlation between a
variable and a cluster component comes straight from the correlation
matrix: corr(x_m, score_D) = (R[m, D] @ v_D) / sqrt(lambda_D).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError
from .linalg import correlation_matrix, eigen_sym, least_squares
from .table import Table

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class VarCluster:
    members: tuple            # variable names
    first_pc_loadings: tuple  # per-member correlation with the first PC
    explained: float          # first eigenvalue of the member sub-matrix


@dataclass
class SelectionReport:
    clusters: list = field(default_factory=list)
    ratios: dict = field(default_factory=dict)
    representatives: list = field(default_factory=list)
    pov_curve: np.ndarray = field(default_factory=lambda: np.empty(0))
    chosen_k: int = 0
    communalities: dict = field(default_factory=dict)
    vif_trace: list = field(default_factory=list)  # (name, vif at removal)
    final_variables: list = field(default_factory=list)

    def to_csv(self) -> str:
        lines = ["section,key,value"]
        for ci, cl in enumerate(self.clusters):
            lines.append(f"cluster,{ci},\"{';'.join(cl.members)}\"")
            lines.append(f"cluster_explained,{ci},{cl.explained!r}")
        for name in sorted(self.ratios):
            lines.append(f"ratio,{name},{self.ratios[name]!r}")
        for name in self.representatives:
            lines.append(f"representative,{name},")
        for k, v in enumerate(self.pov_curve):
            lines.append(f"pov,{k + 1},{float(v)!r}")
        lines.append(f"chosen_k,,{self.chosen_k}")
        for name in sorted(self.communalities):
            lines.append(f"communality,{name},{self.communalities[name]!r}")
        for name, vif in self.vif_trace:
            lines.append(f"vif_removed,{name},{vif!r}")
        for name in self.final_variables:
            lines.append(f"final,{name},")
        return "\n".join(lines) + "\n"

    def pov_svg(self) -> str:
        from .evaluate import render_chart

        points = [((k + 1) / len(self.pov_curve), float(v)) for k, v in enumerate(self.pov_curve)]
        return render_chart(points, "pov")


def _first_pc(corr: np.ndarray, idx: list):
    """(unit eigenvector, eigenvalue) of the leading PC of a sub-matrix."""
    sub = corr[np.ix_(idx, idx)]
    eig = eigen_sym(sub)
    return eig.vectors[:, 0], float(eig.values[0])


def _component_corr(corr: np.ndarray, members: list, v: np.ndarray, lam: float,
                    targets) -> np.ndarray:
    """Correlation of each target variable with a cluster's PC score."""
    if lam <= 0.0:
        return np.zeros(len(targets))
    return (corr[np.ix_(targets, members)] @ v) / np.sqrt(lam)


def varclus(corr: np.ndarray, names, split_threshold: float = 1.0):
    """Divisive variable clustering over a correlation matrix."""
    names = list(names)
    p = corr.shape[0]
    if len(names) != p:
        raise DataError("varclus: names length must match the matrix order")
    clusters = [list(range(p))]
    done = [False]  # marks clusters that failed to split cleanly

    def second_eigenvalue(idx):
        if len(idx) < 2:
            return -np.inf
        sub = corr[np.ix_(idx, idx)]
        return float(eigen_sym(sub).values[1])

    while True:
        candidates = []
        for ci, idx in enumerate(clusters):
            if done[ci]:
                continue
            se = second_eigenvalue(idx)
            if se > split_threshold:
                candidates.append((se, min(names[i] for i in idx), ci))
        if not candidates:
            break
        candidates.sort(key=lambda t: (-t[0], t[1]))
        ci = candidates[0][2]
        idx = clusters[ci]

        sub = corr[np.ix_(idx, idx)]
        eig = eigen_sym(sub)
        c1 = _component_corr(corr, idx, eig.vectors[:, 0], float(eig.values[0]), idx)
        c2 = _component_corr(corr, idx, eig.vectors[:, 1], float(eig.values[1]), idx)
        assign = (c2**2 > c1**2).astype(np.int64)  # ties stay with PC1

        # local reassignment to a fixed point, max 20 passes
        ok = True
        for _ in range(20):
            g1 = [idx[i] for i in range(len(idx)) if assign[i] == 0]
            g2 = [idx[i] for i in range(len(idx)) if assign[i] == 1]
            if not g1 or not g2:
                ok = False
                break
            v1, l1 = _first_pc(corr, g1)
            v2, l2 = _first_pc(corr, g2)
            r1 = _component_corr(corr, g1, v1, l1, idx)
            r2 = _component_corr(corr, g2, v2, l2, idx)
            new_assign = (r2**2 > r1**2).astype(np.int64)
            if np.array_equal(new_assign, assign):
                break
            assign = new_assign
        g1 = [idx[i] for i in range(len(idx)) if assign[i] == 0]
        g2 = [idx[i] for i in range(len(idx)) if assign[i] == 1]
        if not ok or not g1 or not g2:
            done[ci] = True  # degenerate split; keep the cluster whole
            continue
        clusters[ci] = g1
        done[ci] = False
        clusters.append(g2)
        done.append(False)

    out = []
    for idx in clusters:
        v, lam = _first_pc(corr, idx)
        loadings = _component_corr(corr, idx, v, lam, idx)
        out.append(
            VarCluster(
                tuple(names[i] for i in idx),
                tuple(float(x) for x in loadings),
                lam,
            )
        )
    return out, clusters


def _cluster_pcs(corr, index_clusters):
    return [_first_pc(corr, idx) for idx in index_clusters]


def one_minus_r2_ratio(corr: np.ndarray, index_clusters, pcs, var: int, own: int) -> float:
    """(1 - r2 with own cluster PC) / (1 - best r2 with any other PC)."""
    v, lam = pcs[own]
    r_own = float(_component_corr(corr, index_clusters[own], v, lam, [var])[0])
    r2_own = min(r_own**2, 1.0)
    r2_next = 0.0
    for ci, idx in enumerate(index_clusters):
        if ci == own:
            continue
        v, lam = pcs[ci]
        r = float(_component_corr(corr, idx, v, lam, [var])[0])
        r2_next = max(r2_next, min(r**2, 1.0))
    if r2_next >= 1.0:
        log.warning("variable %d is fully explained by a foreign cluster", var)
        return float("inf")
    return (1.0 - r2_own) / (1.0 - r2_next)


def compute_ratios(corr: np.ndarray, names, index_clusters) -> dict:
    pcs = _cluster_pcs(corr, index_clusters)
    ratios = {}
    for own, idx in enumerate(index_clusters):
        for var in idx:
            ratios[names[var]] = one_minus_r2_ratio(corr, index_clusters, pcs, var, own)
    return ratios


def pick_representatives(clusters, ratios) -> list:
    """Per cluster, the member minimizing the 1-R2 ratio (name breaks
    ties); output ordered by descending explained variance."""
    order = sorted(
        range(len(clusters)),
        key=lambda ci: (-clusters[ci].explained, min(clusters[ci].members)),
    )
    reps = []
    for ci in order:
        members = clusters[ci].members
        reps.append(min(members, key=lambda m: (ratios[m], m)))
    return reps


def select_by_pov(representatives, table: Table, coverage: float = 0.99):
    """Keep the shortest representative prefix whose correlation spectrum
    reaches the requested cumulative proportion of variance."""
    if not (0.0 < coverage <= 1.0):
        raise ConfigError(f"coverage must be in (0, 1], got {coverage}")
    if not representatives:
        raise DataError("select_by_pov needs at least one representative")
    if len(representatives) == 1:
        return list(representatives), np.array([1.0]), 1, {representatives[0]: 1.0}
    X = table.predictor_matrix(representatives)
    corr = correlation_matrix(X, representatives)
    eig = eigen_sym(corr)
    p = len(representatives)
    curve = np.cumsum(eig.values) / p
    chosen_k = p
    for k in range(1, p + 1):
        if curve[k - 1] >= coverage - 1e-12:
            chosen_k = k
            break
    communalities = {}
    for j, name in enumerate(representatives):
        load2 = eig.values[:chosen_k] * eig.vectors[j, :chosen_k] ** 2
        communalities[name] = float(load2.sum())
    return list(representatives[:chosen_k]), curve, chosen_k, communalities


def vif_reduce(table: Table, names, threshold: float = 3.0):
    """Drop the worst-VIF variable until all VIFs are <= threshold.

    VIF_j = 1 / (1 - r2 of x_j regressed on the other variables plus an
    intercept); exact ties on the max resolve lexicographically.
    """
    names = list(names)
    trace = []
    while len(names) >= 2:
        X = table.predictor_matrix(names)
        ones = np.ones((X.shape[0], 1))
        vifs = {}
        for j, name in enumerate(names):
            others = np.delete(X, j, axis=1)
            _, r2 = least_squares(np.hstack([ones, others]), X[:, j])
            r2 = min(r2, 1.0)
            vifs[name] = float("inf") if r2 >= 1.0 else 1.0 / (1.0 - r2)
        top = max(vifs.values())
        worst = min(n for n in names if vifs[n] == top)
        if vifs[worst] > threshold:
            trace.append((worst, vifs[worst]))
            names.remove(worst)
        else:
            break
    return names, trace


def select_features(
    table: Table,
    split_threshold: float = 1.0,
    pov_coverage: float = 0.99,
    vif_threshold: float = 3.0,
) -> SelectionReport:
    """Full selection pass: varclus -> ratios -> representatives -> PoV
    prefix -> VIF reduction."""
    names = table.predictor_names()
    X = table.predictor_matrix(names)
    corr = correlation_matrix(X, names)
    clusters, index_clusters = varclus(corr, names, split_threshold)
    ratios = compute_ratios(corr, names, index_clusters)
    reps = pick_representatives(clusters, ratios)
    chosen, curve, chosen_k, communalities = select_by_pov(reps, table, pov_coverage)
    final, trace = vif_reduce(table, chosen, vif_threshold)
    report = SelectionReport(
        clusters=clusters,
        ratios=ratios,
        representatives=reps,
        pov_curve=curve,
        chosen_k=chosen_k,
        communalities=communalities,
        vif_trace=trace,
        final_variables=final,
    )
    return report
