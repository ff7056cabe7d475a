"""Certified Lipschitz constants for Mahalanobis distances and bilinear forms."""

__version__ = "0.1.0"

from ._backend import kernels
from .certify import (
    AuditReport,
    LipschitzCertificate,
    Tolerances,
    Witness,
    audit,
    certify_bilinear,
    certify_mahalanobis,
    finite_diff_gradient,
    gradcheck,
    slope,
    witness_bilinear,
    witness_mahalanobis,
)
from .errors import (
    DegenerateQuadruple,
    DimensionMismatch,
    LipcertError,
    NoConvergence,
    NonFinite,
    NotPsd,
    NotSquare,
    ParseError,
    UndefinedGradient,
    ZeroMatrix,
    ZeroRadius,
)
from .linalg import PsdFactor, is_psd, psd_factor, spectral_norm, top_singular
from .metrics import (
    BallDomain,
    PairGradient,
    PairPoint,
    bilinear,
    bilinear_grad,
    mahalanobis,
    mahalanobis_grad,
)

BACKEND = kernels.NAME
