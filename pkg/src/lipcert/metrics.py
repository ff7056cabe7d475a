"""Mahalanobis distance and bilinear similarity with their analytic gradients."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, UndefinedGradient
from .linalg import PsdFactor, as_square, as_vector

ZERO_DIST_REL = 1e-12


@dataclass(frozen=True)
class PairPoint:
    """An ordered pair ``(x1, x2)``, i.e. one point of the product space."""

    x1: np.ndarray
    x2: np.ndarray

    def __post_init__(self):
        x1 = as_vector(self.x1, "x1")
        x2 = as_vector(self.x2, "x2")
        if x1.shape != x2.shape:
            raise DimensionMismatch(f"pair dimensions differ: {x1.size} vs {x2.size}")
        object.__setattr__(self, "x1", x1)
        object.__setattr__(self, "x2", x2)

    @property
    def dim(self) -> int:
        return self.x1.size

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.x1, self.x2])

    @classmethod
    def from_stacked(cls, z) -> "PairPoint":
        z = np.asarray(z, dtype=np.float64)
        d = z.size // 2
        return cls(z[:d], z[d:])


@dataclass(frozen=True)
class PairGradient:
    g1: np.ndarray
    g2: np.ndarray

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.g1, self.g2])

    def norm(self) -> float:
        """Euclidean norm in the product space."""
        return float(np.sqrt(self.g1 @ self.g1 + self.g2 @ self.g2))


@dataclass(frozen=True)
class BallDomain:
    """Centred Euclidean ball ``{x : ||x|| <= radius}`` in ``dim`` dimensions."""

    radius: float
    dim: int

    def __post_init__(self):
        if not np.isfinite(self.radius) or self.radius < 0:
            raise ValueError(f"radius must be finite and >= 0, got {self.radius}")
        if self.dim < 1:
            raise ValueError(f"dim must be positive, got {self.dim}")

    def contains(self, x, slack: float = 1e-12) -> bool:
        return float(np.linalg.norm(x)) <= self.radius * (1.0 + slack)


def _check_dim(d: int, p: PairPoint):
    if p.dim != d:
        raise DimensionMismatch(f"matrix is {d}x{d} but points have dimension {p.dim}")


def mahalanobis(L: PsdFactor, p: PairPoint) -> float:
    """``||L (x1 - x2)||``: the distance, evaluated through the factor."""
    F = L.factor
    _check_dim(F.shape[0], p)
    return float(np.linalg.norm(F @ (p.x1 - p.x2)))


def zero_distance_threshold(p: PairPoint) -> float:
    return ZERO_DIST_REL * (1.0 + float(np.linalg.norm(p.x1)) + float(np.linalg.norm(p.x2)))


def mahalanobis_grad(M, L: PsdFactor, p: PairPoint) -> PairGradient:
    """Partials ``M (x1 - x2) / d`` and its negation.

    Raises :class:`UndefinedGradient` at (numerically) zero distance, which
    includes differences lying in the null space of ``M``.
    """
    M = as_square(M)
    _check_dim(M.shape[0], p)
    d = mahalanobis(L, p)
    if d <= zero_distance_threshold(p):
        raise UndefinedGradient(f"distance {d:.3g} is too small for a gradient")
    g1 = M @ (p.x1 - p.x2) / d
    return PairGradient(g1, -g1)


def bilinear(M, p: PairPoint) -> float:
    """``x1.T @ M @ x2``; ``M`` may be any square matrix."""
    M = as_square(M)
    _check_dim(M.shape[0], p)
    return float(p.x1 @ M @ p.x2)


def bilinear_grad(M, p: PairPoint) -> PairGradient:
    M = as_square(M)
    _check_dim(M.shape[0], p)
    return PairGradient(M @ p.x2, M.T @ p.x1)
