"""Backend parity: the numba kernels and the pure-numpy fallbacks must
produce bit-identical results."""
import numpy as np
import pytest

from riskpipe.kernels import numba_impl, numpy_impl


def _tree_problem(rng, n=800, p=6):
    X = rng.standard_normal((n, p))
    X[:, : p // 2] = np.round(X[:, : p // 2] * 2) / 2  # coarse columns with ties
    y = (X[:, 0] * X[:, 1] + rng.standard_normal(n) * 0.5 > 0).astype(float)
    pr = np.full(n, y.mean())
    g = pr - y
    h = pr * (1 - pr)
    order = np.vstack(
        [np.argsort(X[:, f], kind="stable") for f in range(p)]
    ).astype(np.int64)
    return X, g, h, order


@pytest.mark.parametrize("seed", range(5))
def test_grow_tree_backends_identical(seed):
    rng = np.random.default_rng(seed)
    X, g, h, order = _tree_problem(rng)
    args = (X, order, g, h, 4, 1.0, 0.0, 1.0)
    out_nb = numba_impl.grow_tree(*args)
    out_np = numpy_impl.grow_tree(*args)
    for a, b in zip(out_nb, out_np):
        assert np.array_equal(a, b)


def test_tree_margin_backends_identical(rng):
    X, g, h, order = _tree_problem(rng)
    tree = numba_impl.grow_tree(X, order, g, h, 3, 1.0, 0.0, 1.0)
    m_nb = numba_impl.tree_margin(*tree[:5], X)
    m_np = numpy_impl.tree_margin(*tree[:5], X)
    assert m_nb.tobytes() == m_np.tobytes()


@pytest.mark.parametrize("order", [1, 2, 7, 24])
def test_jacobi_backends_identical(order, rng):
    A0 = rng.standard_normal((order, order))
    A0 = (A0 + A0.T) / 2
    A1, V1 = A0.copy(), np.eye(order)
    A2, V2 = A0.copy(), np.eye(order)
    s1 = numba_impl.jacobi_sweeps(A1, V1, 1e-12, 100)
    s2 = numpy_impl.jacobi_sweeps(A2, V2, 1e-12, 100)
    assert s1 == s2
    assert A1.tobytes() == A2.tobytes()
    assert V1.tobytes() == V2.tobytes()


def test_kneighbors_backends_identical(rng):
    Z = rng.standard_normal((150, 5))
    Z[:30] = Z[30:60]  # exact duplicates exercise tie-breaking
    a = numba_impl.kneighbor_indices(np.ascontiguousarray(Z), 4)
    b = numpy_impl.kneighbor_indices(np.ascontiguousarray(Z), 4)
    assert np.array_equal(a, b)


def test_backend_selection_env(tmp_path):
    import subprocess
    import sys

    code = "import riskpipe.kernels as k; print(k.BACKEND)"
    for env_val, expected in (("numpy", "numpy"), ("numba", "numba")):
        out = subprocess.run(
            [sys.executable, "-c", code],
            capture_output=True,
            text=True,
            env={"PATH": "/usr/bin:/bin", "RISKPIPE_BACKEND": env_val},
        )
        assert out.stdout.strip() == expected, out.stderr
