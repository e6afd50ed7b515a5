"""Pure-numpy fallback kernels.

Every function mirrors numba_impl.py. Accumulations use np.cumsum /
sequential feature loops so the floating-point order of operations is
identical to the compiled loops: the two backends return the same bits.
"""
import numpy as np


def grow_tree(X, order, g, h, max_depth, lam, gamma, min_child_weight):
    n, p = X.shape
    max_nodes = 2 ** (max_depth + 1)
    feat = np.full(max_nodes, -1, np.int64)
    thr = np.zeros(max_nodes, np.float64)
    left = np.full(max_nodes, -1, np.int64)
    right = np.full(max_nodes, -1, np.int64)
    weight = np.zeros(max_nodes, np.float64)
    gsum = np.zeros(max_nodes, np.float64)
    hsum = np.zeros(max_nodes, np.float64)
    count = np.zeros(max_nodes, np.int64)

    work = order.copy()
    stack = [(0, n, 0, -1, 0)]
    nn = 0
    while stack:
        start, end, depth, parent, isleft = stack.pop()
        node = nn
        nn += 1
        if parent >= 0:
            if isleft == 1:
                left[parent] = node
            else:
                right[parent] = node
        rows0 = work[0, start:end]
        G = float(np.cumsum(g[rows0])[-1]) if end > start else 0.0
        H = float(np.cumsum(h[rows0])[-1]) if end > start else 0.0
        gsum[node] = G
        hsum[node] = H
        count[node] = end - start
        weight[node] = -G / (H + lam)
        if depth >= max_depth or end - start < 2:
            continue
        parent_term = G * G / (H + lam)
        best_gain = 0.0
        best_feat = -1
        best_thr = 0.0
        for f in range(p):
            rows = work[f, start:end]
            vals = X[rows, f]
            gl = np.cumsum(g[rows])[:-1]
            hl = np.cumsum(h[rows])[:-1]
            boundary = vals[:-1] != vals[1:]
            hr = H - hl
            valid = boundary & (hl >= min_child_weight) & (hr >= min_child_weight)
            if not valid.any():
                continue
            gr = G - gl
            with np.errstate(divide="ignore", invalid="ignore"):
                gain = (
                    0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent_term)
                    - gamma
                )
            gain = np.where(valid, gain, -np.inf)
            gain = np.where(np.isnan(gain), -np.inf, gain)
            i = int(np.argmax(gain))
            gi = float(gain[i])
            if gi > best_gain:
                v = float(vals[i])
                vn = float(vals[i + 1])
                t = 0.5 * (v + vn)
                if t <= v:  # midpoint unrepresentable between adjacent floats
                    t = vn
                best_gain = gi
                best_feat = f
                best_thr = t
        if best_feat < 0:
            continue
        feat[node] = best_feat
        thr[node] = best_thr
        nleft = 0
        for f in range(p):
            rows = work[f, start:end].copy()  # work is overwritten below
            mask = X[rows, best_feat] < best_thr
            nleft = int(mask.sum())
            work[f, start : start + nleft] = rows[mask]
            work[f, start + nleft : end] = rows[~mask]
        mid = start + nleft
        # push right first so the left child pops next (preorder layout)
        stack.append((mid, end, depth + 1, node, 0))
        stack.append((start, mid, depth + 1, node, 1))
    return (
        feat[:nn],
        thr[:nn],
        left[:nn],
        right[:nn],
        weight[:nn],
        gsum[:nn],
        hsum[:nn],
        count[:nn],
    )


def tree_margin(feat, thr, left, right, weight, X):
    n = X.shape[0]
    idx = np.zeros(n, dtype=np.int64)
    while True:
        f = feat[idx]
        rows = np.flatnonzero(f >= 0)
        if rows.size == 0:
            break
        cur = idx[rows]
        goleft = X[rows, f[rows]] < thr[cur]
        idx[rows] = np.where(goleft, left[cur], right[cur])
    return weight[idx]


def jacobi_sweeps(A, V, rel_tol, max_sweeps):
    n = A.shape[0]
    iu = np.triu_indices(n, 1)
    sweeps = 0
    while sweeps < max_sweeps:
        off = float(np.abs(A[iu]).max()) if iu[0].size else 0.0
        dmax = float(np.abs(np.diag(A)).max()) if n else 0.0
        if off < rel_tol * dmax or off == 0.0:
            break
        for k in range(n - 1):
            for l in range(k + 1, n):
                akl = A[k, l]
                if akl == 0.0:
                    continue
                diff = A[l, l] - A[k, k]
                if abs(akl) < 1e-36 * abs(diff):
                    t = akl / diff
                else:
                    phi = diff / (2.0 * akl)
                    t = 1.0 / (abs(phi) + np.sqrt(phi * phi + 1.0))
                    if phi < 0.0:
                        t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ak = A[k, :].copy()
                al = A[l, :].copy()
                A[k, :] = c * ak - s * al
                A[l, :] = s * ak + c * al
                ak = A[:, k].copy()
                al = A[:, l].copy()
                A[:, k] = c * ak - s * al
                A[:, l] = s * ak + c * al
                A[k, l] = 0.0
                A[l, k] = 0.0
                vk = V[:, k].copy()
                vl = V[:, l].copy()
                V[:, k] = c * vk - s * vl
                V[:, l] = s * vk + c * vl
        sweeps += 1
    return sweeps


def kneighbor_indices(Z, k):
    m, d = Z.shape
    out = np.empty((m, k), np.int64)
    for i in range(m):
        acc = np.zeros(m, np.float64)
        for f in range(d):
            diff = Z[:, f] - Z[i, f]
            acc += diff * diff
        acc[i] = np.inf
        order = np.argsort(acc, kind="stable")
        out[i, :] = order[:k]
    return out
