"""The compiled kernels must agree with the numpy fallback."""

import os
import subprocess
import sys

import numpy as np
import pytest

from lipcert import _backend

py = _backend.python
cy = _backend.compiled
needs_cy = pytest.mark.skipif(cy is None, reason="compiled kernels not built")


def batch(rng, n, d):
    return [np.ascontiguousarray(rng.uniform(-1, 1, (n, d))) for _ in range(4)]


@needs_cy
@pytest.mark.parametrize("d", [1, 2, 5, 8])
def test_batched_kernels_agree(rng, d):
    G = rng.uniform(-1, 1, (d, d))
    M = np.ascontiguousarray(G.T @ G)
    L = np.ascontiguousarray(np.linalg.cholesky(M).T)
    X1, X2, Y1, Y2 = batch(rng, 500, d)
    Y1[:3], Y2[:3] = X1[:3], X2[:3]  # degenerate quadruples
    X2[3] = X1[3]  # zero distance
    for name, args in [
        ("mahalanobis_values", (L, X1, X2)),
        ("bilinear_values", (G, X1, X2)),
        ("mahalanobis_slopes", (L, X1, X2, Y1, Y2)),
        ("bilinear_slopes", (G, X1, X2, Y1, Y2)),
        ("mahalanobis_grad_norms", (M, L, X1, X2, 1e-12)),
        ("bilinear_grad_norms", (G, X1, X2)),
    ]:
        a = getattr(py, name)(*args)
        b = getattr(cy, name)(*args)
        np.testing.assert_array_equal(np.isnan(a), np.isnan(b), err_msg=name)
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-14, err_msg=name)
    assert np.isnan(py.mahalanobis_slopes(L, X1, X2, Y1, Y2)[:3]).all()
    assert np.isnan(py.mahalanobis_grad_norms(M, L, X1, X2, 1e-12)[3])


@needs_cy
def test_cholesky_agrees(rng):
    for _ in range(100):
        d = int(rng.integers(1, 9))
        G = rng.uniform(-1, 1, (d, d))
        if rng.random() < 0.3:
            G[0] = 0.0
        M = np.ascontiguousarray(G.T @ G)
        a = py.cholesky_upper(M, 1e-10, 1e-9)
        b = cy.cholesky_upper(M, 1e-10, 1e-9)
        # small late pivots amplify summation-order differences in the factor itself
        np.testing.assert_allclose(a[0], b[0], rtol=1e-8, atol=1e-10)
        for R in (a[0], b[0]):
            assert np.max(np.abs(R.T @ R - M)) <= 1e-9 * (1 + np.max(np.abs(M)))
        assert a[1:3] == b[1:3]


@needs_cy
def test_power_iteration_agrees(rng):
    for _ in range(100):
        d = int(rng.integers(1, 9))
        A = np.ascontiguousarray(rng.uniform(-1, 1, (d, d)))
        v0 = rng.standard_normal(d)
        a = py.power_iteration(A, v0, 1e-10, 10_000)
        b = cy.power_iteration(A, v0, 1e-10, 10_000)
        assert a[0] == pytest.approx(b[0], rel=1e-13)
        assert a[3] and b[3]


def test_negative_pivot_status():
    for k in (py,) + ((cy,) if cy else ()):
        R, rank, status, index, pivot = k.cholesky_upper(np.array([[1.0, 2.0], [2.0, 1.0]]), 1e-10, 1e-9)
        assert status == k.CHOL_NEGATIVE_PIVOT and index == 1 and pivot == pytest.approx(-3.0)


def test_pure_python_switch():
    code = "import lipcert; print(lipcert.BACKEND)"
    env = dict(os.environ, LIPCERT_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
