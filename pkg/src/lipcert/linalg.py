"""Dense linear algebra: validation, PSD factorization and spectral norms.

Vectors and square matrices are plain float64 numpy arrays; the helpers here
validate them at the library boundary.  The factorization and the power
iteration run on the selected kernel backend.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .errors import DimensionMismatch, NoConvergence, NonFinite, NotPsd, NotSquare

TOL_PSD = 1e-10
TOL_FACTOR = 1e-9
SPECTRAL_TOL = 1e-10
MAX_ITER = 10_000


def as_vector(x, name="x") -> np.ndarray:
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise DimensionMismatch(f"{name} must be a non-empty 1-d vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise NonFinite(f"{name} has non-finite entries")
    return v


def as_square(A, name="matrix") -> np.ndarray:
    """Return ``A`` as a C-contiguous float64 square matrix, validating it."""
    M = np.ascontiguousarray(A, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] == 0:
        raise NotSquare(f"{name} must be a non-empty square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise NonFinite(f"{name} has non-finite entries")
    return M


def symmetrize(M):
    """``(M + M.T) / 2`` together with the largest absolute asymmetry."""
    M = as_square(M)
    asym = float(np.max(np.abs(M - M.T)))
    return np.ascontiguousarray(0.5 * (M + M.T)), asym


@dataclass(frozen=True)
class PsdFactor:
    """Triangular ``factor`` with ``factor.T @ factor`` reproducing the input.

    Rows belonging to skipped (numerically zero) pivots are zero, so
    ``rank`` may be smaller than the dimension.
    """

    factor: np.ndarray
    rank: int
    reconstruction_error: float
    max_asymmetry: float = 0.0

    @property
    def dim(self) -> int:
        return self.factor.shape[0]


def psd_factor(M, tol: float = TOL_PSD, tol_factor: float = TOL_FACTOR) -> PsdFactor:
    """Factor a symmetric positive semi-definite matrix as ``F.T @ F``.

    The input is symmetrized first.  Pivots no larger than ``tol * scale``
    (``scale = 1 + max|diag|``) are skipped when their remaining row is
    negligible; a pivot below ``-tol * scale`` raises :class:`NotPsd`.
    Skipping a pivot discards the rest of its row, which is only harmless
    for a genuinely semi-definite matrix, so the reconstruction error must
    also stay within ``tol_factor * (1 + max|M|)``.
    """
    S, asym = symmetrize(M)
    scale = 1.0 + float(np.max(np.abs(np.diag(S))))
    bound = tol_factor * (1.0 + float(np.max(np.abs(S))))
    R, rank, status, index, pivot = kernels.cholesky_upper(S, tol * scale, 0.5 * bound)
    if status != kernels.CHOL_OK:
        raise NotPsd(
            f"matrix is not positive semi-definite: pivot {index} is {pivot:.6g} "
            f"(threshold {-tol * scale:.3g})"
        )
    err = float(np.max(np.abs(R.T @ R - S)))
    if err > bound:
        raise NotPsd(
            f"matrix is not positive semi-definite: factor residual {err:.3g} exceeds {bound:.3g}"
        )
    return PsdFactor(factor=R, rank=int(rank), reconstruction_error=err, max_asymmetry=asym)


def is_psd(M, tol: float = TOL_PSD, tol_factor: float = TOL_FACTOR) -> bool:
    try:
        psd_factor(M, tol, tol_factor)
    except NotPsd:
        return False
    return True


def start_vector(d: int, seed: int) -> np.ndarray:
    v = np.random.default_rng(seed).standard_normal(d)
    return v / np.linalg.norm(v)


@dataclass(frozen=True)
class TopSingular:
    """Largest singular value with its right singular vector ``v``."""

    value: float
    v: np.ndarray
    iterations: int
    residual: float


def top_singular(A, tol: float = SPECTRAL_TOL, max_iter: int = MAX_ITER, seed: int = 0) -> TopSingular:
    """Power iteration on ``A.T @ A`` from a seeded start vector.

    Restarts once from ``seed + 1`` if the first run does not converge or
    lands in the null space of a nonzero matrix.
    """
    A = as_square(A)
    nonzero = bool(np.any(A))
    last = None
    for s in (seed, seed + 1):
        sigma, v, its, converged, residual = kernels.power_iteration(
            A, start_vector(A.shape[0], s), tol, max_iter
        )
        last = (sigma, v, its, residual)
        if converged and (sigma > 0.0 or not nonzero):
            return TopSingular(float(sigma), np.asarray(v), int(its), float(residual))
    sigma, v, its, residual = last
    raise NoConvergence(
        f"power iteration did not converge in {max_iter} iterations "
        f"(last estimate {sigma:.17g}, residual {residual:.3g})",
        value=float(sigma),
        residual=float(residual),
        iterations=int(its),
    )


def spectral_norm(A, tol: float = SPECTRAL_TOL, max_iter: int = MAX_ITER, seed: int = 0) -> float:
    """Largest singular value of ``A``."""
    return top_singular(A, tol, max_iter, seed).value
