"""Input validation helpers for covariance matrices and observation data.

All public operations funnel their matrix inputs through these checks so the
numerical core can assume well-formed Hermitian PSD inputs.
"""

from __future__ import annotations

import numpy as np

from .exceptions import NumericalDomainError

# Tolerances for the structural invariants of a covariance matrix.
HERMITIAN_RTOL = 1e-12
PSD_RTOL = 1e-10


def as_square_matrix(a, *, name: str = "matrix") -> np.ndarray:
    """Coerce to a square 2-D complex128 array."""
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NumericalDomainError(f"{name} must be square 2-D, got shape {a.shape}")
    return np.ascontiguousarray(a, dtype=np.complex128)


def check_hermitian(a: np.ndarray, *, rtol: float = HERMITIAN_RTOL, name: str = "matrix") -> None:
    """Raise unless ``a`` is Hermitian to within ``rtol`` of its largest entry."""
    scale = max(np.abs(a).max(), 1.0) if a.size else 1.0
    err = np.abs(a - a.conj().T).max() if a.size else 0.0
    if err > rtol * scale:
        raise NumericalDomainError(
            f"{name} is not Hermitian: max asymmetry {err:.3e} exceeds {rtol:.1e} x {scale:.3e}"
        )


def check_psd(a: np.ndarray, *, rtol: float = PSD_RTOL, name: str = "matrix") -> None:
    """Raise unless ``a`` is positive semidefinite to within tolerance.

    Accepts minimum eigenvalue down to ``-rtol`` times the maximum eigenvalue.
    """
    w = np.linalg.eigvalsh(a)
    w_max = max(w[-1], 0.0)
    if w[0] < -rtol * max(w_max, 1e-300):
        raise NumericalDomainError(
            f"{name} is not PSD: min eigenvalue {w[0]:.3e} vs max {w_max:.3e}"
        )


def validate_covariance(a, *, name: str = "covariance") -> np.ndarray:
    """Coerce and validate a covariance matrix (square, Hermitian, PSD)."""
    a = as_square_matrix(a, name=name)
    check_hermitian(a, name=name)
    check_psd(a, name=name)
    return a


def hermitian_part(a: np.ndarray) -> np.ndarray:
    """Project onto the Hermitian part, (A + A^H) / 2."""
    return 0.5 * (a + a.conj().T)


def hermitian_sqrt(a: np.ndarray) -> np.ndarray:
    """Principal Hermitian square root via eigendecomposition.

    Negative eigenvalues (roundoff on a PSD input) are floored at zero.
    """
    w, v = np.linalg.eigh(hermitian_part(a))
    return (v * np.sqrt(np.maximum(w, 0.0))) @ v.conj().T


def psd_factor(a: np.ndarray) -> np.ndarray:
    """Factor L with L L^H = A for a PSD matrix, tolerating rank deficiency."""
    w, v = np.linalg.eigh(hermitian_part(a))
    return v * np.sqrt(np.maximum(w, 0.0))


def matrices_coincide(a: np.ndarray, b: np.ndarray, *, tol: float = 1e-12) -> bool:
    """True when two matrices agree entrywise to ``tol`` (relative to scale)."""
    scale = max(np.abs(a).max(initial=0.0), np.abs(b).max(initial=0.0), 1.0)
    return bool(np.abs(a - b).max(initial=0.0) <= tol * scale)
