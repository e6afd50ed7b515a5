"""Dense symmetric linear algebra used by selection and the learners:
Pearson correlation, a cyclic-Jacobi eigensolver, and least squares via
normal equations."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DataError

JACOBI_REL_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
SYMMETRY_TOL = 1e-9
RIDGE_JITTER = 1e-10


@dataclass(frozen=True)
class EigenResult:
    values: np.ndarray   # descending
    vectors: np.ndarray  # orthonormal columns, vectors[:, k] pairs values[k]


def correlation_matrix(X: np.ndarray, names=None) -> np.ndarray:
    """Pearson correlations of the columns of X (population normalization)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise DataError("correlation_matrix needs a 2-d matrix with >= 2 rows")
    n = X.shape[0]
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    zero = np.flatnonzero(sd == 0.0)
    if zero.size:
        j = int(zero[0])
        label = names[j] if names is not None else f"column {j}"
        raise DataError(f"zero-variance column: {label}")
    Z = (X - mu) / sd
    R = (Z.T @ Z) / n
    R = np.clip((R + R.T) / 2.0, -1.0, 1.0)
    np.fill_diagonal(R, 1.0)
    return R


def eigen_sym(m: np.ndarray, rel_tol=JACOBI_REL_TOL, max_sweeps=JACOBI_MAX_SWEEPS) -> EigenResult:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Values are sorted descending, vectors permuted to match; each vector's
    largest-magnitude component is made positive.
    """
    A = np.array(m, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DataError("eigen_sym needs a square matrix")
    if A.size and float(np.abs(A - A.T).max()) > SYMMETRY_TOL:
        raise DataError("eigen_sym input is not symmetric")
    n = A.shape[0]
    V = np.eye(n)
    kernels.jacobi_sweeps(A, V, rel_tol, max_sweeps)
    d = np.diag(A).copy()
    order = np.argsort(-d, kind="stable")
    values = d[order]
    vectors = V[:, order].copy()
    for k in range(n):
        j = int(np.argmax(np.abs(vectors[:, k])))
        if vectors[j, k] < 0.0:
            vectors[:, k] = -vectors[:, k]
    return EigenResult(values, vectors)


def least_squares(X: np.ndarray, y: np.ndarray):
    """Minimize ||X b - y||^2 via normal equations.

    A ridge jitter (1e-10, scaled by the mean Gram diagonal so it stays
    meaningful at any column scale) is added only when the Gram matrix is
    singular to working precision. Returns (coefficients, r_squared) with
    r_squared = 0 when y has no variance.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, p = X.shape
    if n < p:
        raise DataError(f"least_squares needs rows >= columns, got {n} x {p}")
    G = X.T @ X
    c = X.T @ y
    beta = None
    try:
        cand = np.linalg.solve(G, c)
        if np.isfinite(cand).all():
            resid = np.abs(G @ cand - c).max() if p else 0.0
            scale = float(np.abs(G).max() * max(np.abs(cand).max(), 1.0) + np.abs(c).max()) if p else 1.0
            if resid <= 1e-8 * max(scale, 1.0):
                beta = cand
    except np.linalg.LinAlgError:
        pass
    if beta is None:
        jitter = RIDGE_JITTER * max(1.0, float(np.trace(G)) / max(p, 1))
        beta = np.linalg.solve(G + jitter * np.eye(p), c)
    yhat = X @ beta
    ssr = float(((y - yhat) ** 2).sum())
    sst = float(((y - y.mean()) ** 2).sum())
    r_squared = 0.0 if sst == 0.0 else 1.0 - ssr / sst
    return beta, r_squared
