"""Numpy implementations of the hot kernels.

Mirrors ``_kernels.pyx`` function for function; used when the compiled
extension is unavailable or ``LIPCERT_PURE_PYTHON`` is set.  Batched inputs
are ``(n, d)`` float64 arrays, one point per row.
"""

import numpy as np

NAME = "python"

#: Status codes returned by :func:`cholesky_upper`.
CHOL_OK = 0
CHOL_NEGATIVE_PIVOT = 1

_TINY_DENOM = 1e-300
TAIL_CAP = 1e3


def _tail_factor(delta, delta_prev):
    if not delta_prev > 0.0:
        return TAIL_CAP
    rho = delta / delta_prev
    if rho >= 1.0:
        return TAIL_CAP
    return min(max(rho / (1.0 - rho), 1.0), TAIL_CAP)


def cholesky_upper(M, thr, row_tol):
    """Upper-triangular ``R`` with ``R.T @ R == M`` for semi-definite ``M``.

    A pivot ``<= thr`` is skipped (its row of ``R`` left zero) unless it is
    positive and the matching Schur-complement row exceeds ``row_tol``, in
    which case it is kept as an ordinary pivot.  Returns
    ``(R, rank, status, index, pivot)``; a pivot below ``-thr`` stops the
    factorization with ``CHOL_NEGATIVE_PIVOT``.
    """
    M = np.asarray(M, dtype=np.float64)
    d = M.shape[0]
    R = np.zeros((d, d))
    rank = 0
    for k in range(d):
        col = R[:k, k]
        s = M[k, k] - col @ col
        if s < -thr:
            return R, rank, CHOL_NEGATIVE_PIVOT, k, float(s)
        row = M[k, k + 1:] - col @ R[:k, k + 1:]
        if s <= thr and (s <= 0.0 or row.size == 0 or np.max(np.abs(row)) <= row_tol):
            continue
        r = np.sqrt(s)
        R[k, k] = r
        R[k, k + 1:] = row / r
        rank += 1
    return R, rank, CHOL_OK, -1, 0.0


def power_iteration(A, v0, tol, max_iter):
    """Power iteration on ``A.T @ A``.

    Returns ``(sigma, v, iterations, converged, residual)`` where ``v`` is the
    unit iterate at which ``sigma**2`` (the Rayleigh quotient) was evaluated
    and ``residual`` is ``||A.T A v - sigma**2 v|| / sigma**2``.

    Stops when the Rayleigh-quotient change, inflated by the geometric tail
    factor ``rho / (1 - rho)`` estimated from successive changes (clamped to
    ``[1, TAIL_CAP]``), falls below ``tol * rq``.
    """
    A = np.asarray(A, dtype=np.float64)
    v = np.array(v0, dtype=np.float64)
    v /= np.linalg.norm(v)
    rq_prev = np.nan
    delta_prev = np.nan
    rq = 0.0
    residual = np.inf
    for it in range(1, max_iter + 1):
        y = A @ v
        rq = float(y @ y)
        if rq == 0.0:
            return 0.0, v, it, True, 0.0
        w = A.T @ y
        residual = float(np.linalg.norm(w - rq * v)) / rq
        delta = abs(rq - rq_prev)
        if delta * _tail_factor(delta, delta_prev) <= tol * rq:
            return float(np.sqrt(rq)), v, it, True, residual
        rq_prev = rq
        delta_prev = delta
        v = w / np.linalg.norm(w)
    return float(np.sqrt(rq)), v, max_iter, False, residual


def mahalanobis_values(L, X1, X2):
    return np.linalg.norm((X1 - X2) @ L.T, axis=1)


def bilinear_values(M, X1, X2):
    return np.einsum("ij,ij->i", X1 @ M, X2)


def _slopes(f, f_prime, X1, X2, Y1, Y2):
    denom = np.sqrt(np.sum((X1 - Y1) ** 2, axis=1) + np.sum((X2 - Y2) ** 2, axis=1))
    out = np.full(denom.shape, np.nan)
    ok = denom > _TINY_DENOM
    out[ok] = np.abs(f[ok] - f_prime[ok]) / denom[ok]
    return out


def mahalanobis_slopes(L, X1, X2, Y1, Y2):
    """Slope ratios for quadruples ``(X1[i], X2[i])`` vs ``(Y1[i], Y2[i])``; NaN if degenerate."""
    return _slopes(mahalanobis_values(L, X1, X2), mahalanobis_values(L, Y1, Y2), X1, X2, Y1, Y2)


def bilinear_slopes(M, X1, X2, Y1, Y2):
    return _slopes(bilinear_values(M, X1, X2), bilinear_values(M, Y1, Y2), X1, X2, Y1, Y2)


def mahalanobis_grad_norms(M, L, X1, X2, zero_rel):
    """Product-space gradient norms; NaN where the distance is below the zero threshold."""
    diff = X1 - X2
    dist = np.linalg.norm(diff @ L.T, axis=1)
    thresh = zero_rel * (1.0 + np.linalg.norm(X1, axis=1) + np.linalg.norm(X2, axis=1))
    out = np.full(dist.shape, np.nan)
    ok = dist > thresh
    g = diff[ok] @ M.T
    out[ok] = np.sqrt(2.0) * np.linalg.norm(g, axis=1) / dist[ok]
    return out


def bilinear_grad_norms(M, X1, X2):
    g1 = X2 @ M.T
    g2 = X1 @ M
    return np.sqrt(np.sum(g1 ** 2, axis=1) + np.sum(g2 ** 2, axis=1))
