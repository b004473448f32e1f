"""
Closed-form arithmetic and exponentials for traceless 2x2 complex matrices.

Matrices are numpy arrays whose last two axes have shape (2, 2); any leading
axes are broadcast, so a stack of matrices (one per spectral point, or one per
time step) is handled in a single call.
"""

import logging
from typing import Union

import numpy as np

logger = logging.getLogger(__name__)

ComplexLike = Union[complex, np.ndarray]

# Below this |k| the series for sinh(k)/k is used instead of the quotient
SINHC_SERIES_THRESHOLD = 1e-4

IDENTITY = np.eye(2, dtype=np.complex128)


def identity(shape: tuple = ()) -> np.ndarray:
    """Return a stack of 2x2 identity matrices with the given leading shape."""
    return np.broadcast_to(IDENTITY, tuple(shape) + (2, 2)).copy()


def mat_mul(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """
    Multiply two (stacks of) 2x2 complex matrices.

    Args:
        x: Left factor, shape (..., 2, 2)
        y: Right factor, shape (..., 2, 2)

    Returns:
        The product x @ y with broadcast leading axes
    """
    return np.matmul(x, y)


def sinhc(k: ComplexLike) -> ComplexLike:
    """
    Evaluate sinh(k)/k, switching to the Taylor series near zero.

    The function is even in k, so the branch of any square root that produced
    k does not matter.
    """
    k = np.asarray(k, dtype=np.complex128)
    small = np.abs(k) < SINHC_SERIES_THRESHOLD
    k2 = k * k
    series = 1.0 + k2 / 6.0 + k2 * k2 / 120.0
    safe_k = np.where(small, 1.0, k)
    return np.where(small, series, np.sinh(safe_k) / safe_k)


def exp_from_parts(d: ComplexLike, x: ComplexLike, y: ComplexLike) -> np.ndarray:
    """
    Exponential of [[d, x], [y, -d]] without input validation.

    Uses exp(m) = cosh(k) I + sinh(k)/k m with k = sqrt(d^2 + x y). This is the
    unchecked kernel behind exp_traceless and exp_offdiag; the step builders
    call it directly in their inner loops.

    Args:
        d: Diagonal entry (broadcastable array or scalar)
        x: Upper-right entry
        y: Lower-left entry

    Returns:
        Array of shape broadcast(d, x, y).shape + (2, 2)
    """
    d, x, y = np.broadcast_arrays(
        np.asarray(d, dtype=np.complex128),
        np.asarray(x, dtype=np.complex128),
        np.asarray(y, dtype=np.complex128),
    )
    k = np.sqrt(d * d + x * y)
    c = np.cosh(k)
    s = sinhc(k)

    out = np.empty(d.shape + (2, 2), dtype=np.complex128)
    out[..., 0, 0] = c + s * d
    out[..., 0, 1] = s * x
    out[..., 1, 0] = s * y
    out[..., 1, 1] = c - s * d
    return out


def _check_finite(m: np.ndarray, name: str) -> None:
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")


def exp_traceless(m: np.ndarray) -> np.ndarray:
    """
    Exponential of a traceless 2x2 complex matrix (or a stack of them).

    Args:
        m: Array of shape (..., 2, 2) with m[..., 1, 1] == -m[..., 0, 0]

    Returns:
        exp(m), unimodular up to roundoff

    Raises:
        ValueError: If m is not 2x2, has non-finite entries or is not traceless
    """
    m = np.asarray(m, dtype=np.complex128)
    if m.shape[-2:] != (2, 2):
        raise ValueError(f"Expected (..., 2, 2) matrices, got shape {m.shape}")
    _check_finite(m, "Matrix")
    if np.any(m[..., 0, 0] + m[..., 1, 1] != 0):
        raise ValueError("exp_traceless requires a traceless matrix")
    return exp_from_parts(m[..., 0, 0], m[..., 0, 1], m[..., 1, 0])


def exp_offdiag(x: ComplexLike, y: ComplexLike) -> np.ndarray:
    """
    Exponential of the off-diagonal matrix [[0, x], [y, 0]].

    For y = -conj(x) the result is unitary (a rotation for real x).

    Args:
        x: Upper-right entry
        y: Lower-left entry

    Returns:
        exp([[0, x], [y, 0]]), shape broadcast(x, y).shape + (2, 2)
    """
    x = np.asarray(x, dtype=np.complex128)
    y = np.asarray(y, dtype=np.complex128)
    _check_finite(x, "Upper-right entry")
    _check_finite(y, "Lower-left entry")
    return exp_from_parts(0.0, x, y)


def det(m: np.ndarray) -> ComplexLike:
    """Determinant of (a stack of) 2x2 matrices."""
    return m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]


def dagger(m: np.ndarray) -> np.ndarray:
    """Conjugate transpose over the last two axes."""
    return np.conj(np.swapaxes(m, -1, -2))


def metric(sigma: int) -> np.ndarray:
    """The conserved form diag(1, sigma) of the Zakharov-Shabat problem."""
    return np.diag([1.0, float(sigma)]).astype(np.complex128)
