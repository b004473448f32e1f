"""
Module for polynomial arithmetic with 2x2 matrix coefficients.

A MatPoly stands for P(W) / Z^d with W = Z^2 and Z = exp(-i tau zeta / 3).
The transfer matrix of a whole signal is assembled as one such polynomial by a
binary tree of FFT-accelerated products and then evaluated on a spectral grid.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np
import scipy.fft

logger = logging.getLogger(__name__)

# Products whose output degree is below this use direct convolution
NAIVE_DEGREE_THRESHOLD = 32


@dataclass(frozen=True)
class MatPoly:
    """
    Polynomial in W with 2x2 complex matrix coefficients, divided by Z^denom_z_exp.

    coeffs has shape (..., degree + 1, 2, 2); leading axes index a batch of
    independent polynomials.
    """

    coeffs: np.ndarray
    denom_z_exp: int = 0

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        if coeffs.ndim < 3 or coeffs.shape[-2:] != (2, 2):
            raise ValueError(f"Expected coefficients of shape (..., n, 2, 2), got {coeffs.shape}")
        if coeffs.shape[-3] == 0:
            raise ValueError("A polynomial needs at least one coefficient")
        if self.denom_z_exp < 0:
            raise ValueError(f"denom_z_exp must be non-negative, got {self.denom_z_exp}")
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def degree(self) -> int:
        return self.coeffs.shape[-3] - 1

    @property
    def batch_shape(self) -> tuple:
        return self.coeffs.shape[:-3]


@dataclass(frozen=True)
class EvalGrid:
    """Real spectral points xi; `uniform` marks xi_j = xi_0 + j * dxi."""

    xi: np.ndarray
    uniform: bool = False
    tau: Optional[float] = None
    dxi: float = field(default=0.0)

    def __post_init__(self):
        xi = np.atleast_1d(np.asarray(self.xi, dtype=np.float64))
        if xi.ndim != 1 or xi.size == 0:
            raise ValueError("A spectral grid needs at least one point")
        if not np.all(np.isfinite(xi)):
            raise ValueError("Spectral grid has non-finite points")
        object.__setattr__(self, "xi", xi)
        if self.uniform and xi.size > 1:
            dxi = self.dxi or (xi[-1] - xi[0]) / (xi.size - 1)
            expected = xi[0] + dxi * np.arange(xi.size)
            if not np.allclose(xi, expected, rtol=0.0, atol=1e-12 * max(1.0, np.abs(xi).max())):
                raise ValueError("Grid flagged uniform but points are not equispaced")
            object.__setattr__(self, "dxi", float(dxi))

    @classmethod
    def linspace(cls, xi_min: float, xi_max: float, n: int, tau: Optional[float] = None) -> "EvalGrid":
        """Uniform grid of n points from xi_min to xi_max inclusive."""
        if n < 1:
            raise ValueError(f"Number of spectral points must be >= 1, got {n}")
        if n > 1 and not xi_min < xi_max:
            raise ValueError(f"Expected xi_min < xi_max, got {xi_min} and {xi_max}")
        dxi = (xi_max - xi_min) / (n - 1) if n > 1 else 0.0
        xi = xi_min + dxi * np.arange(n)
        return cls(xi=xi, uniform=True, tau=tau, dxi=dxi)

    def with_tau(self, tau: float) -> "EvalGrid":
        return replace(self, tau=tau)

    def __len__(self) -> int:
        return self.xi.size


def _next_power_of_2(n: int) -> int:
    return 1 << (n - 1).bit_length()


def _mul_coeffs(p: np.ndarray, q: np.ndarray, workers: int = 1) -> np.ndarray:
    """
    Batched product of coefficient arrays p (..., Lp, 2, 2) and q (..., Lq, 2, 2).

    p is the later-in-time factor and stays on the left.
    """
    lp, lq = p.shape[-3], q.shape[-3]
    n_out = lp + lq - 1

    if n_out - 1 < NAIVE_DEGREE_THRESHOLD:
        batch = np.broadcast_shapes(p.shape[:-3], q.shape[:-3])
        out = np.zeros(batch + (n_out, 2, 2), dtype=np.complex128)
        for k in range(lp):
            out[..., k:k + lq, :, :] += np.matmul(p[..., k:k + 1, :, :], q)
        return out

    n_fft = _next_power_of_2(n_out)
    p_hat = scipy.fft.fft(p, n=n_fft, axis=-3, workers=workers)
    q_hat = scipy.fft.fft(q, n=n_fft, axis=-3, workers=workers)
    out = scipy.fft.ifft(np.matmul(p_hat, q_hat), axis=-3, workers=workers)
    return out[..., :n_out, :, :]


def matpoly_mul(p: MatPoly, q: MatPoly, workers: int = 1) -> MatPoly:
    """
    Multiply two matrix polynomials, p on the left.

    Direct convolution is used below NAIVE_DEGREE_THRESHOLD, FFT convolution above.

    Args:
        p: Later-in-time factor
        q: Earlier-in-time factor
        workers: Threads for scipy.fft

    Returns:
        MatPoly of degree deg p + deg q and denominator exponent summed
    """
    return MatPoly(coeffs=_mul_coeffs(p.coeffs, q.coeffs, workers),
                   denom_z_exp=p.denom_z_exp + q.denom_z_exp)


def _stack_steps(steps: Union[MatPoly, Sequence[MatPoly]]) -> MatPoly:
    if isinstance(steps, MatPoly):
        if steps.coeffs.ndim == 3:
            return MatPoly(coeffs=steps.coeffs[None], denom_z_exp=steps.denom_z_exp)
        if steps.coeffs.ndim != 4:
            raise ValueError("A batched step polynomial must have one leading axis")
        return steps

    steps = list(steps)
    if not steps:
        raise ValueError("tree_product needs at least one step")
    exps = {s.denom_z_exp for s in steps}
    if len(exps) != 1:
        raise ValueError(f"Steps must share one denominator exponent, got {sorted(exps)}")
    width = max(s.degree for s in steps) + 1
    coeffs = np.zeros((len(steps), width, 2, 2), dtype=np.complex128)
    for i, s in enumerate(steps):
        coeffs[i, :s.degree + 1] = s.coeffs
    return MatPoly(coeffs=coeffs, denom_z_exp=exps.pop())


def tree_product(steps: Union[MatPoly, Sequence[MatPoly]], workers: int = 1) -> MatPoly:
    """
    Product T_M ... T_0 of step polynomials given in time order.

    Adjacent pairs (0,1), (2,3), ... are multiplied level by level, later step
    on the left; an odd element at the end of a level is carried up unchanged.
    The pairing depends only on the number of steps.

    Args:
        steps: Sequence of MatPoly in time order, or one MatPoly whose coeffs
            carry a leading step axis (as returned by step_polynomial for a
            whole signal)
        workers: Threads for scipy.fft

    Returns:
        Single MatPoly with denom_z_exp = number of steps * per-step exponent

    Raises:
        ValueError: If there are no steps
    """
    batch = _stack_steps(steps)
    coeffs = batch.coeffs
    n_steps = coeffs.shape[0]
    if n_steps == 0:
        raise ValueError("tree_product needs at least one step")
    total_degree = n_steps * (coeffs.shape[1] - 1)

    level = 0
    while coeffs.shape[0] > 1:
        count = coeffs.shape[0]
        pairs = count // 2
        products = _mul_coeffs(coeffs[1:2 * pairs:2], coeffs[0:2 * pairs:2], workers)
        if count % 2:
            carry = np.zeros((1,) + products.shape[1:], dtype=np.complex128)
            carry[0, :coeffs.shape[1]] = coeffs[-1]
            products = np.concatenate((products, carry), axis=0)
        coeffs = products
        level += 1
        logger.debug(f"Tree level {level}: {coeffs.shape[0]} polynomials of length {coeffs.shape[1]}")

    return MatPoly(coeffs=coeffs[0, :total_degree + 1], denom_z_exp=n_steps * batch.denom_z_exp)


def _horner(coeffs: np.ndarray, w: np.ndarray) -> np.ndarray:
    acc = np.broadcast_to(coeffs[-1], w.shape + (2, 2)).copy()
    w = w[..., None, None]
    for k in range(coeffs.shape[0] - 2, -1, -1):
        acc = acc * w + coeffs[k]
    return acc


def evaluate_horner(p: MatPoly, zeta: Union[complex, np.ndarray], tau: float) -> np.ndarray:
    """
    Evaluate P(W) / Z^d at spectral point(s) zeta.

    Where |W| > 1 (Im zeta > 0) the reversed polynomial is evaluated in 1/W and
    the scalar W^deg Z^-d is formed from its logarithm, so large degrees do not
    overflow the intermediate powers.

    Args:
        p: Polynomial (no batch axes)
        zeta: Spectral parameter(s)
        tau: Grid step of the signal the polynomial was built from

    Returns:
        Matrix of shape zeta.shape + (2, 2)
    """
    if p.batch_shape:
        raise ValueError("evaluate_horner expects a single polynomial")
    zeta = np.asarray(zeta, dtype=np.complex128)
    flat = zeta.reshape(-1)
    log_z = -1j * tau * flat / 3.0
    w = np.exp(2.0 * log_z)
    out = np.empty(flat.shape + (2, 2), dtype=np.complex128)

    inside = np.abs(w) <= 1.0
    if np.any(inside):
        scale = np.exp(-p.denom_z_exp * log_z[inside])
        out[inside] = _horner(p.coeffs, w[inside]) * scale[:, None, None]
    outside = ~inside
    if np.any(outside):
        scale = np.exp((2 * p.degree - p.denom_z_exp) * log_z[outside])
        out[outside] = _horner(p.coeffs[::-1], 1.0 / w[outside]) * scale[:, None, None]
    return out.reshape(zeta.shape + (2, 2))


def _chirp_z(coeffs: np.ndarray, start_phase: float, step_phase: float, m: int,
             workers: int = 1) -> np.ndarray:
    """
    Bluestein evaluation of sum_k c_k V_j^k at V_j = exp(-i (start_phase + j step_phase)).

    Every chirp is the exponential of a purely imaginary argument, so each has
    modulus one to rounding and the transform keeps |P| on the unit circle.
    """
    n = coeffs.shape[-3]
    size = scipy.fft.next_fast_len(n + m - 1)
    k = np.arange(max(n, m), dtype=np.int64)
    chirp = np.exp(-0.5j * step_phase * (k * k).astype(np.float64))

    weighted = coeffs * (chirp[:n] * np.exp(-1j * start_phase * k[:n]))[:, None, None]
    kernel = np.zeros(size, dtype=np.complex128)
    kernel[:m] = np.conj(chirp[:m])
    kernel[size - n + 1:] = np.conj(chirp[1:n][::-1])

    x_hat = scipy.fft.fft(weighted, n=size, axis=-3, workers=workers)
    k_hat = scipy.fft.fft(kernel, workers=workers)
    conv = scipy.fft.ifft(x_hat * k_hat[:, None, None], axis=-3, workers=workers)
    return conv[..., :m, :, :] * chirp[:m, None, None]


def evaluate_grid(p: MatPoly, grid: EvalGrid, workers: int = 1) -> np.ndarray:
    """
    Evaluate P(W) / Z^d at every point of a real spectral grid.

    Uniform grids use a chirp-Z transform of each matrix entry (the nodes
    W_j = exp(-2i tau xi_j / 3) are equispaced on the unit circle); other grids
    fall back to Horner's rule.

    Args:
        p: Polynomial (no batch axes)
        grid: Spectral grid with tau set
        workers: Threads for scipy.fft

    Returns:
        Array of shape (N, 2, 2)
    """
    if grid.tau is None:
        raise ValueError("evaluate_grid needs the grid step tau of the signal")
    tau = grid.tau
    n = len(grid)

    if not grid.uniform or n == 1:
        logger.debug(f"Horner evaluation at {n} points")
        return evaluate_horner(p, grid.xi, tau)

    logger.debug(f"Chirp-Z evaluation of degree {p.degree} at {n} points")
    values = _chirp_z(p.coeffs, 2.0 * tau * grid.xi[0] / 3.0, 2.0 * tau * grid.dxi / 3.0, n, workers)
    scale = np.exp(1j * tau * p.denom_z_exp * grid.xi / 3.0)
    return values * scale[:, None, None]
