"""Certified Lipschitz constants, their empirical audit and tightness witnesses.

Both constants are for the Euclidean norm on the product space, i.e. a pair
``(x1, x2)`` is measured as the stacked ``2d``-vector.

* Mahalanobis distance: ``k = sqrt(2) * ||L||_2`` with ``M = L.T @ L``;
  valid on all of R^d.
* Bilinear form on the ball of radius ``R``: ``k = sqrt(2) * ||M||_2 * R``.

The audit draws quadruples ``(x1, x2, x1', x2')`` and checks every slope
``|f(x1, x2) - f(x1', x2')| / ||(x1, x2) - (x1', x2')||`` against ``k``; it
also records the largest gradient norm seen, a finite-difference check of the
analytic gradients, and the slope achieved by the closed-form witness.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from . import linalg
from ._backend import kernels
from .errors import DegenerateQuadruple, DimensionMismatch, ZeroMatrix, ZeroRadius
from .linalg import PsdFactor, as_square, as_vector
from .metrics import (
    BallDomain,
    PairGradient,
    PairPoint,
    bilinear,
    bilinear_grad,
    mahalanobis,
    mahalanobis_grad,
)

log = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)
MAHALANOBIS = "mahalanobis"
BILINEAR = "bilinear"
CROSS_CHECK_RTOL = 1e-8


@dataclass(frozen=True)
class Tolerances:
    tol_psd: float = linalg.TOL_PSD
    tol_factor: float = linalg.TOL_FACTOR
    spectral_tol: float = linalg.SPECTRAL_TOL
    max_iter: int = linalg.MAX_ITER
    violation_rtol: float = 1e-9
    zero_dist_rel: float = 1e-12
    fd_step: float = 1e-6

    def as_dict(self) -> dict:
        return asdict(self)


DEFAULT_TOLERANCES = Tolerances()


@dataclass(frozen=True)
class LipschitzCertificate:
    metric_kind: str
    k_theoretical: float
    dim: int
    factor_norm: Optional[float] = None
    matrix_norm: Optional[float] = None
    radius: Optional[float] = None
    # mahalanobis only: sqrt(||M||_2), an independent route to factor_norm
    sqrt_matrix_norm: Optional[float] = None
    cross_check_rel_err: Optional[float] = None
    rank: Optional[int] = None
    max_asymmetry: float = 0.0
    tolerances: Tolerances = DEFAULT_TOLERANCES
    factor: Optional[PsdFactor] = field(default=None, repr=False, compare=False)


@dataclass(frozen=True)
class Witness:
    """Quadruple ``(x1, x2)`` vs ``(y1, y2)`` whose slope approaches the constant."""

    x1: np.ndarray
    x2: np.ndarray
    y1: np.ndarray
    y2: np.ndarray
    slope: float
    base_grad_norm: float


@dataclass(frozen=True)
class AuditReport:
    samples: int
    seed: int
    empirical_slope_sup: float
    empirical_grad_sup: float
    witness_slope: float
    violation_count: int
    gradcheck_max_err: float
    correlated_samples: int = 0
    undefined_gradient_count: int = 0
    degenerate_count: int = 0
    gradcheck_pairs: int = 0
    sample_radius: float = 1.0

    def as_dict(self) -> dict:
        return asdict(self)


def _rel_err(a: float, b: float) -> float:
    scale = max(abs(a), abs(b))
    return 0.0 if scale == 0.0 else abs(a - b) / scale


def certify_mahalanobis(M, tols: Tolerances = DEFAULT_TOLERANCES, seed: int = 0) -> LipschitzCertificate:
    """Certificate ``k = sqrt(2) ||L||_2`` for the distance induced by PSD ``M``."""
    F = linalg.psd_factor(M, tols.tol_psd, tols.tol_factor)
    S, _ = linalg.symmetrize(M)
    factor_norm = linalg.spectral_norm(F.factor, tols.spectral_tol, tols.max_iter, seed)
    sqrt_mnorm = math.sqrt(linalg.spectral_norm(S, tols.spectral_tol, tols.max_iter, seed))
    rel = _rel_err(factor_norm, sqrt_mnorm)
    if rel > CROSS_CHECK_RTOL:
        log.warning("||L||_2 = %.17g disagrees with sqrt(||M||_2) = %.17g (rel %.3g)",
                    factor_norm, sqrt_mnorm, rel)
    return LipschitzCertificate(
        metric_kind=MAHALANOBIS,
        k_theoretical=SQRT2 * factor_norm,
        dim=S.shape[0],
        factor_norm=factor_norm,
        sqrt_matrix_norm=sqrt_mnorm,
        cross_check_rel_err=rel,
        rank=F.rank,
        max_asymmetry=F.max_asymmetry,
        tolerances=tols,
        factor=F,
    )


def certify_bilinear(M, domain: BallDomain, tols: Tolerances = DEFAULT_TOLERANCES,
                     seed: int = 0) -> LipschitzCertificate:
    """Certificate ``k = sqrt(2) ||M||_2 R`` for ``x1.T M x2`` on the ball of radius ``R``."""
    M = as_square(M)
    if domain.dim != M.shape[0]:
        raise DimensionMismatch(f"domain has dimension {domain.dim}, matrix is {M.shape[0]}x{M.shape[0]}")
    mnorm = linalg.spectral_norm(M, tols.spectral_tol, tols.max_iter, seed)
    return LipschitzCertificate(
        metric_kind=BILINEAR,
        k_theoretical=SQRT2 * mnorm * domain.radius,
        dim=M.shape[0],
        matrix_norm=mnorm,
        radius=float(domain.radius),
        tolerances=tols,
    )


def slope(f: Callable[[PairPoint], float], q) -> float:
    """Slope of ``f`` between the pair-points ``(q[0], q[1])`` and ``(q[2], q[3])``."""
    x1, x2, y1, y2 = (as_vector(v) for v in q)
    a, b = PairPoint(x1, x2), PairPoint(y1, y2)
    denom = float(np.linalg.norm(a.stacked() - b.stacked()))
    if not denom > 1e-300:
        raise DegenerateQuadruple("the two pair-points coincide")
    return abs(f(a) - f(b)) / denom


def finite_diff_gradient(f: Callable[[PairPoint], float], p: PairPoint, h: float = 1e-6) -> PairGradient:
    """Central differences over every coordinate of the stacked pair."""
    z = p.stacked()
    g = np.empty_like(z)
    for i in range(z.size):
        zp = z.copy()
        zm = z.copy()
        zp[i] += h
        zm[i] -= h
        g[i] = (f(PairPoint.from_stacked(zp)) - f(PairPoint.from_stacked(zm))) / (2.0 * h)
    d = p.dim
    return PairGradient(g[:d], g[d:])


# -- witnesses ---------------------------------------------------------------

def _step_witness(f, x1, x2, grad: PairGradient, h: float, domain: Optional[BallDomain] = None) -> Witness:
    gnorm = grad.norm()
    n1, n2 = grad.g1 / gnorm, grad.g2 / gnorm
    y1, y2 = x1 + h * n1, x2 + h * n2
    if domain is not None and not (domain.contains(y1) and domain.contains(y2)):
        y1, y2 = x1 - h * n1, x2 - h * n2
    return Witness(x1, x2, y1, y2, slope(f, (x1, x2, y1, y2)), gnorm)


def witness_mahalanobis(M, h: float = 1e-4, tols: Tolerances = DEFAULT_TOLERANCES,
                        seed: int = 0) -> Witness:
    """Step from ``(v, 0)`` along the gradient, ``v`` the top right singular vector of ``L``.

    There ``L v = s u`` with ``s = ||L||_2``, so ``M v / d = L.T u s / s``
    has norm ``s`` and the stacked gradient has norm ``sqrt(2) s``.  The
    distance is linear along that direction, hence the slope matches ``k``
    up to round-off.
    """
    S, _ = linalg.symmetrize(M)
    if not np.any(S):
        raise ZeroMatrix("the zero matrix has no tightness witness")
    F = linalg.psd_factor(S, tols.tol_psd, tols.tol_factor)
    v = linalg.top_singular(F.factor, tols.spectral_tol, tols.max_iter, seed).v
    x1, x2 = v.copy(), np.zeros_like(v)
    grad = mahalanobis_grad(S, F, PairPoint(x1, x2))
    return _step_witness(lambda p: mahalanobis(F, p), x1, x2, grad, h)


def witness_bilinear(M, domain: BallDomain, shrink: float = 0.999, h: Optional[float] = None,
                     tols: Tolerances = DEFAULT_TOLERANCES, seed: int = 0) -> Witness:
    """Witness at ``(shrink R u, shrink R v)`` for the top singular pair ``(u, v)``.

    With ``M v = s u`` and ``M.T u = s v`` the partials are ``shrink R s u``
    and ``shrink R s v``, so the gradient norm is ``shrink * k``.
    """
    M = as_square(M)
    if not 0.0 < shrink < 1.0:
        raise ValueError(f"shrink must lie in (0, 1), got {shrink}")
    R = float(domain.radius)
    if R == 0.0:
        raise ZeroRadius("a zero-radius domain has no tightness witness")
    if not np.any(M):
        raise ZeroMatrix("the zero matrix has no tightness witness")
    if h is None:
        h = 1e-6 * R
    top = linalg.top_singular(M, tols.spectral_tol, tols.max_iter, seed)
    v = top.v
    u = M @ v
    u /= np.linalg.norm(u)
    x1, x2 = shrink * R * u, shrink * R * v
    grad = bilinear_grad(M, PairPoint(x1, x2))
    return _step_witness(lambda p: bilinear(M, p), x1, x2, grad, h, domain)


# -- audit -------------------------------------------------------------------

def sample_ball(rng: np.random.Generator, n: int, d: int, radius: float) -> np.ndarray:
    """``n`` points uniform in the ``d``-ball: Gaussian direction, radius ``R U^(1/d)``."""
    z = rng.standard_normal((n, d))
    norms = np.linalg.norm(z, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    r = radius * rng.random((n, 1)) ** (1.0 / d)
    return np.ascontiguousarray(z / norms * r)


def _project_ball(X: np.ndarray, radius: float) -> np.ndarray:
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    scale = np.where(norms > radius, radius / np.maximum(norms, 1e-300), 1.0)
    return np.ascontiguousarray(X * scale)


def _batched_fd(values, X1, X2, h):
    n, d = X1.shape
    G = np.empty((n, 2 * d))
    for j in range(2 * d):
        A1p, A2p, A1m, A2m = X1.copy(), X2.copy(), X1.copy(), X2.copy()
        if j < d:
            A1p[:, j] += h
            A1m[:, j] -= h
        else:
            A2p[:, j - d] += h
            A2m[:, j - d] -= h
        G[:, j] = (values(A1p, A2p) - values(A1m, A2m)) / (2.0 * h)
    return G


def audit(cert: LipschitzCertificate, M, domain: Optional[BallDomain] = None, n_samples: int = 10_000,
          seed: int = 42, tols: Optional[Tolerances] = None, sample_radius: float = 1.0,
          correlated_step: float = 1e-3, gradcheck_pairs: int = 1000,
          gradcheck_min_dist: float = 0.1) -> AuditReport:
    """Empirically audit ``cert`` against ``n_samples`` random quadruples.

    Quadruples are two independent uniform pair-points from the sampling
    ball (the certificate's ball for bilinear forms, ``sample_radius`` for
    Mahalanobis distances).  A further ``n_samples // 10`` quadruples pair a
    point with a Gaussian perturbation of itself (std ``correlated_step * R``)
    to probe short secants.  The sample stream depends only on ``seed``.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    tols = tols or cert.tolerances
    d = cert.dim
    if cert.metric_kind == MAHALANOBIS:
        S, _ = linalg.symmetrize(M)
        F = cert.factor or linalg.psd_factor(S, tols.tol_psd, tols.tol_factor)
        L = np.ascontiguousarray(F.factor)
        R = float(sample_radius)
        slopes_fn = lambda *Q: kernels.mahalanobis_slopes(L, *Q)
        grads_fn = lambda A, B: kernels.mahalanobis_grad_norms(S, L, A, B, tols.zero_dist_rel)
        values_fn = lambda A, B: kernels.mahalanobis_values(L, A, B)
        project = False
    else:
        if domain is None:
            domain = BallDomain(cert.radius, d)
        S = as_square(M)
        R = float(domain.radius)
        slopes_fn = lambda *Q: kernels.bilinear_slopes(S, *Q)
        grads_fn = lambda A, B: kernels.bilinear_grad_norms(S, A, B)
        values_fn = lambda A, B: kernels.bilinear_values(S, A, B)
        project = True

    rng = np.random.default_rng(seed)
    X1, X2, Y1, Y2 = (sample_ball(rng, n_samples, d, R) for _ in range(4))
    n_corr = n_samples // 10
    if n_corr:
        P1, P2 = sample_ball(rng, n_corr, d, R), sample_ball(rng, n_corr, d, R)
        step = correlated_step * max(R, 1e-300)
        Q1 = P1 + step * rng.standard_normal((n_corr, d))
        Q2 = P2 + step * rng.standard_normal((n_corr, d))
        if project:
            Q1, Q2 = _project_ball(Q1, R), _project_ball(Q2, R)
        X1, X2 = np.vstack([X1, P1]), np.vstack([X2, P2])
        Y1, Y2 = np.vstack([Y1, Q1]), np.vstack([Y2, Q2])

    slopes = slopes_fn(X1, X2, Y1, Y2)
    defined = ~np.isnan(slopes)
    limit = cert.k_theoretical * (1.0 + tols.violation_rtol)
    violations = int(np.count_nonzero(slopes[defined] > limit))
    slope_sup = float(slopes[defined].max()) if defined.any() else 0.0

    gnorms = np.concatenate([grads_fn(X1, X2), grads_fn(Y1, Y2)])
    gdef = ~np.isnan(gnorms)
    grad_sup = float(gnorms[gdef].max()) if gdef.any() else 0.0

    gc_err, gc_n = _gradcheck(cert.metric_kind, S, values_fn, X1[:gradcheck_pairs], X2[:gradcheck_pairs],
                              tols, gradcheck_min_dist)

    try:
        if cert.metric_kind == MAHALANOBIS:
            w = witness_mahalanobis(S, tols=tols)
        else:
            w = witness_bilinear(S, domain, tols=tols)
        wslope = w.slope
    except (ZeroMatrix, ZeroRadius):
        wslope = 0.0

    return AuditReport(
        samples=n_samples,
        seed=seed,
        empirical_slope_sup=slope_sup,
        empirical_grad_sup=grad_sup,
        witness_slope=float(wslope),
        violation_count=violations,
        gradcheck_max_err=gc_err,
        correlated_samples=n_corr,
        undefined_gradient_count=int(np.count_nonzero(~gdef)),
        degenerate_count=int(np.count_nonzero(~defined)),
        gradcheck_pairs=gc_n,
        sample_radius=R,
    )


def analytic_gradients(kind: str, M: np.ndarray, X1: np.ndarray, X2: np.ndarray, dist=None) -> np.ndarray:
    """Stacked analytic gradients for a batch of pairs, shape ``(n, 2d)``."""
    if kind == MAHALANOBIS:
        g1 = (X1 - X2) @ M.T / dist[:, None]
        return np.hstack([g1, -g1])
    return np.hstack([X2 @ M.T, X1 @ M])


def _gradcheck(kind, M, values_fn, X1, X2, tols, min_dist):
    """Max of ``|fd - analytic| / (1 + |analytic|)`` over eligible pairs."""
    X1, X2 = np.ascontiguousarray(X1), np.ascontiguousarray(X2)
    dist = None
    if kind == MAHALANOBIS:
        dist = values_fn(X1, X2)
        keep = dist > min_dist
        X1, X2, dist = np.ascontiguousarray(X1[keep]), np.ascontiguousarray(X2[keep]), dist[keep]
    if X1.shape[0] == 0:
        return 0.0, 0
    fd = _batched_fd(values_fn, X1, X2, tols.fd_step)
    an = analytic_gradients(kind, M, X1, X2, dist)
    return float(np.max(np.abs(fd - an) / (1.0 + np.abs(an)))), X1.shape[0]


def gradcheck(kind: str, M, n_pairs: int = 1000, seed: int = 42, radius: float = 1.0,
              tols: Tolerances = DEFAULT_TOLERANCES, min_dist: float = 0.1):
    """Finite-difference check of the analytic gradients on random in-ball pairs.

    Returns ``(max_err, pairs_checked)``; Mahalanobis pairs closer than
    ``min_dist`` are excluded.
    """
    rng = np.random.default_rng(seed)
    if kind == MAHALANOBIS:
        S, _ = linalg.symmetrize(M)
        L = np.ascontiguousarray(linalg.psd_factor(S, tols.tol_psd, tols.tol_factor).factor)
        values_fn = lambda A, B: kernels.mahalanobis_values(L, A, B)
    elif kind == BILINEAR:
        S = as_square(M)
        values_fn = lambda A, B: kernels.bilinear_values(S, A, B)
    else:
        raise ValueError(f"unknown metric {kind!r}")
    d = S.shape[0]
    X1, X2 = sample_ball(rng, n_pairs, d, radius), sample_ball(rng, n_pairs, d, radius)
    return _gradcheck(kind, S, values_fn, X1, X2, tols, min_dist)
