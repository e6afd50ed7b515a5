"""Numba-compiled kernels. numpy_impl.py mirrors every function; keep the
arithmetic (order of additions included) in sync between the two files so
the backends stay bit-identical."""
import numpy as np
from numba import njit


@njit(cache=True)
def grow_tree(X, order, g, h, max_depth, lam, gamma, min_child_weight):
    """Grow one regression tree depth-first with exact greedy splits.

    X: (n, p) features; order: (p, n) per-feature row ids sorted by value;
    g/h: gradient and hessian per row. Returns preorder node arrays
    (feat, thr, left, right, weight, gsum, hsum, count); feat = -1 marks
    a leaf. Splits land at midpoints between consecutive distinct values,
    require gain > 0 and a hessian sum >= min_child_weight on both sides;
    ties resolve to the smallest feature index, then smallest threshold.
    """
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
    buf = np.empty(n, np.int64)

    cap = 2 * (max_depth + 2)
    st_start = np.empty(cap, np.int64)
    st_end = np.empty(cap, np.int64)
    st_depth = np.empty(cap, np.int64)
    st_parent = np.empty(cap, np.int64)
    st_isleft = np.empty(cap, np.int64)
    st_start[0] = 0
    st_end[0] = n
    st_depth[0] = 0
    st_parent[0] = -1
    st_isleft[0] = 0
    sp = 1
    nn = 0
    while sp > 0:
        sp -= 1
        start = st_start[sp]
        end = st_end[sp]
        depth = st_depth[sp]
        parent = st_parent[sp]
        isleft = st_isleft[sp]
        node = nn
        nn += 1
        if parent >= 0:
            if isleft == 1:
                left[parent] = node
            else:
                right[parent] = node
        G = 0.0
        H = 0.0
        for i in range(start, end):
            r = work[0, i]
            G += g[r]
            H += h[r]
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
            gl = 0.0
            hl = 0.0
            for i in range(start, end - 1):
                r = work[f, i]
                gl += g[r]
                hl += h[r]
                v = X[r, f]
                vn = X[work[f, i + 1], f]
                if v == vn:
                    continue
                hr = H - hl
                if hl < min_child_weight or hr < min_child_weight:
                    continue
                gr = G - gl
                gain = (
                    0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent_term)
                    - gamma
                )
                if gain > best_gain:
                    t = 0.5 * (v + vn)
                    if t <= v:  # midpoint unrepresentable between adjacent floats
                        t = vn
                    best_gain = gain
                    best_feat = f
                    best_thr = t
        if best_feat < 0:
            continue
        feat[node] = best_feat
        thr[node] = best_thr
        nleft = 0
        for f in range(p):
            nl = 0
            for i in range(start, end):
                r = work[f, i]
                if X[r, best_feat] < best_thr:
                    buf[start + nl] = r
                    nl += 1
            nr = 0
            for i in range(start, end):
                r = work[f, i]
                if not (X[r, best_feat] < best_thr):
                    buf[start + nl + nr] = r
                    nr += 1
            for i in range(start, end):
                work[f, i] = buf[i]
            nleft = nl
        mid = start + nleft
        # push right first so the left child pops next (preorder layout)
        st_start[sp] = mid
        st_end[sp] = end
        st_depth[sp] = depth + 1
        st_parent[sp] = node
        st_isleft[sp] = 0
        sp += 1
        st_start[sp] = start
        st_end[sp] = mid
        st_depth[sp] = depth + 1
        st_parent[sp] = node
        st_isleft[sp] = 1
        sp += 1
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


@njit(cache=True)
def tree_margin(feat, thr, left, right, weight, X):
    """Raw leaf weight reached by each row (learning rate applied by caller)."""
    n = X.shape[0]
    out = np.empty(n, np.float64)
    for i in range(n):
        node = 0
        while feat[node] >= 0:
            if X[i, feat[node]] < thr[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = weight[node]
    return out


@njit(cache=True)
def jacobi_sweeps(A, V, rel_tol, max_sweeps):
    """Cyclic Jacobi rotations in place until the largest off-diagonal
    magnitude drops below rel_tol * max|diag|. Returns sweeps used."""
    n = A.shape[0]
    sweeps = 0
    while sweeps < max_sweeps:
        off = 0.0
        dmax = 0.0
        for i in range(n):
            d = abs(A[i, i])
            if d > dmax:
                dmax = d
            for j in range(i + 1, n):
                a = abs(A[i, j])
                if a > off:
                    off = a
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
                for j in range(n):
                    akj = A[k, j]
                    alj = A[l, j]
                    A[k, j] = c * akj - s * alj
                    A[l, j] = s * akj + c * alj
                for i in range(n):
                    aik = A[i, k]
                    ail = A[i, l]
                    A[i, k] = c * aik - s * ail
                    A[i, l] = s * aik + c * ail
                A[k, l] = 0.0
                A[l, k] = 0.0
                for i in range(n):
                    vik = V[i, k]
                    vil = V[i, l]
                    V[i, k] = c * vik - s * vil
                    V[i, l] = s * vik + c * vil
        sweeps += 1
    return sweeps


@njit(cache=True)
def kneighbor_indices(Z, k):
    """k nearest neighbours per row of Z (self excluded), squared
    euclidean distance, ties resolved to the smaller row index."""
    m, d = Z.shape
    out = np.empty((m, k), np.int64)
    dist = np.empty(m, np.float64)
    for i in range(m):
        for j in range(m):
            acc = 0.0
            for f in range(d):
                diff = Z[j, f] - Z[i, f]
                acc += diff * diff
            dist[j] = acc
        dist[i] = np.inf
        for slot in range(k):
            best = -1
            bestd = np.inf
            for j in range(m):
                if dist[j] < bestd:
                    bestd = dist[j]
                    best = j
            out[i, slot] = best
            dist[best] = np.inf
    return out
