"""
Module for building one-step transfer matrices of the Zakharov-Shabat problem.

Each step maps the state across one grid cell, Psi(t_n + tau/2) = T_n Psi(t_n - tau/2).
Four variants are provided:

    BO      exp(tau Q_n)
    TES4    E+ exp(tau Q_n) E-
    TES4SB  E+ [11-exponential splitting of exp(tau Q_n)] E-
    StepPoly  the TES4SB step as a degree-7 matrix polynomial in W = Z^2,
              Z = exp(-i tau zeta / 3), with Z^-7 taken out

All functions broadcast over numpy arrays: the window entries may hold every
node of a signal and zeta may hold a whole spectral grid, as long as their
shapes broadcast.
"""

import logging
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from spectrum_extractor.fastpoly import MatPoly
from spectrum_extractor.mat2 import ComplexLike, exp_from_parts

logger = logging.getLogger(__name__)

# Weights of the six B-exponentials, left to right
SUZUKI_B_WEIGHTS = (7 / 48, 3 / 8, -1 / 48, -1 / 48, 3 / 8, 7 / 48)

# Powers c of the five A-exponentials diag(Z^c, Z^-c), left to right
SUZUKI_A_POWERS = (1, -1, 3, -1, 1)

# Each A-exponential is Z^-|c| times a monomial diagonal; entries are
# (column that picks up W, power of W)
SUZUKI_MONOMIALS = tuple((0 if c > 0 else 1, abs(c)) for c in SUZUKI_A_POWERS)

STEP_DEGREE = sum(power for _, power in SUZUKI_MONOMIALS)
STEP_DENOM_Z_EXP = STEP_DEGREE


def _check_tau_sigma(tau: float, sigma: int) -> None:
    if not tau > 0:
        raise ValueError(f"Grid step tau must be positive, got {tau}")
    if sigma not in (1, -1):
        raise ValueError(f"sigma must be +1 or -1, got {sigma}")


@dataclass(frozen=True)
class StepWindow:
    """Potential at t_{n-1}, t_n, t_{n+1}; entries may be arrays over n."""

    q_prev: ComplexLike
    q_curr: ComplexLike
    q_next: ComplexLike
    tau: float
    sigma: int = 1

    def __post_init__(self):
        _check_tau_sigma(self.tau, self.sigma)


@dataclass(frozen=True)
class DerivPair:
    """Central-difference estimates of q' (q1) and q'' (q2)."""

    q1: ComplexLike
    q2: ComplexLike


class StepPoly(MatPoly):
    """The TES4SB step of one node as S(W) / Z^7 with deg S <= 7."""

    def __post_init__(self):
        super().__post_init__()
        if self.coeffs.shape[-3] != STEP_DEGREE + 1:
            raise ValueError(f"A step polynomial has {STEP_DEGREE + 1} coefficients, "
                             f"got {self.coeffs.shape[-3]}")


def central_derivatives(w: StepWindow) -> DerivPair:
    """
    Second-order central differences for the first two derivatives of q.

    Args:
        w: Step window

    Returns:
        DerivPair with q1 = (q+ - q-)/(2 tau) and q2 = (q+ - 2q + q-)/tau^2
    """
    q_prev = np.asarray(w.q_prev, dtype=np.complex128)
    q_curr = np.asarray(w.q_curr, dtype=np.complex128)
    q_next = np.asarray(w.q_next, dtype=np.complex128)
    q1 = (q_next - q_prev) / (2.0 * w.tau)
    q2 = (q_next - 2.0 * q_curr + q_prev) / (w.tau * w.tau)
    return DerivPair(q1=q1, q2=q2)


def edge_matrices(d: DerivPair, tau: float, sigma: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    The zeta-independent outer exponentials of the three-exponential step.

    E+- = exp(+-(tau^2/12) Q' + (tau^3/48) Q''), where only the potential part
    of Q varies in t, so both generators are off-diagonal.

    Args:
        d: Derivative estimates
        tau: Grid step
        sigma: Dispersion sign

    Returns:
        Tuple (Eplus, Eminus)
    """
    _check_tau_sigma(tau, sigma)
    q1 = np.asarray(d.q1, dtype=np.complex128)
    q2 = np.asarray(d.q2, dtype=np.complex128)
    first = (tau * tau / 12.0) * q1
    second = (tau ** 3 / 48.0) * q2

    upper_plus = first + second
    upper_minus = -first + second
    e_plus = exp_from_parts(0.0, upper_plus, -sigma * np.conj(upper_plus))
    e_minus = exp_from_parts(0.0, upper_minus, -sigma * np.conj(upper_minus))
    return e_plus, e_minus


def b_exponential(q: ComplexLike, sigma: int, weight: float, tau: float) -> np.ndarray:
    """exp(weight * tau * B) with B = [[0, q], [-sigma q*, 0]]."""
    x = weight * tau * np.asarray(q, dtype=np.complex128)
    return exp_from_parts(0.0, x, -sigma * np.conj(x))


def a_exponential(zeta: ComplexLike, tau: float, power: int) -> np.ndarray:
    """diag(Z^c, Z^-c) with Z = exp(-i tau zeta / 3), i.e. exp((c/3) tau A)."""
    z_c = np.exp(-1j * tau * power * np.asarray(zeta, dtype=np.complex128) / 3.0)
    out = np.zeros(z_c.shape + (2, 2), dtype=np.complex128)
    out[..., 0, 0] = z_c
    out[..., 1, 1] = 1.0 / z_c
    return out


def bo_step(q: ComplexLike, sigma: int, zeta: ComplexLike, tau: float) -> np.ndarray:
    """
    Boffetta-Osborne step exp(tau Q) with Q = [[-i zeta, q], [-sigma q*, i zeta]].

    Args:
        q: Potential sample(s)
        sigma: Dispersion sign
        zeta: Spectral parameter(s), broadcast against q
        tau: Grid step

    Returns:
        Step matrix (or stack of them)
    """
    _check_tau_sigma(tau, sigma)
    q = np.asarray(q, dtype=np.complex128)
    zeta = np.asarray(zeta, dtype=np.complex128)
    return exp_from_parts(-1j * tau * zeta, tau * q, -sigma * tau * np.conj(q))


def tes4_step(w: StepWindow, zeta: ComplexLike) -> np.ndarray:
    """
    Fourth-order three-exponential step E+ exp(tau Q_n) E-.

    Reduces to bo_step when the window is constant.
    """
    e_plus, e_minus = edge_matrices(central_derivatives(w), w.tau, w.sigma)
    centre = bo_step(w.q_curr, w.sigma, zeta, w.tau)
    return np.matmul(np.matmul(e_plus, centre), e_minus)


def suzuki_outer_factors(w: StepWindow) -> Tuple[np.ndarray, ...]:
    """
    The six zeta-independent constant factors of a TES4SB step.

    The edges are folded into the first and last B-exponential, giving
    (E+ G1, G2, G3, G4, G5, G6 E-) where G_k = exp(w_k tau B).
    """
    e_plus, e_minus = edge_matrices(central_derivatives(w), w.tau, w.sigma)
    factors = [b_exponential(w.q_curr, w.sigma, weight, w.tau) for weight in SUZUKI_B_WEIGHTS]
    factors[0] = np.matmul(e_plus, factors[0])
    factors[-1] = np.matmul(factors[-1], e_minus)
    return tuple(factors)


def tes4sb_step(w: StepWindow, zeta: ComplexLike) -> np.ndarray:
    """
    TES4SB step: the TES4 step with exp(tau Q_n) replaced by the 11-exponential
    fourth-order splitting with B-exponentials at the edges (13 factors in all).
    """
    factors = suzuki_outer_factors(w)
    step = factors[0]
    for power, factor in zip(SUZUKI_A_POWERS, factors[1:]):
        step = np.matmul(np.matmul(step, a_exponential(zeta, w.tau, power)), factor)
    return step


def _times_monomial(coeffs: np.ndarray, column: int, power: int) -> np.ndarray:
    """Right-multiply a matrix polynomial by the diagonal with W^power at `column`."""
    out = np.zeros_like(coeffs)
    other = 1 - column
    out[..., :, :, other] = coeffs[..., :, :, other]
    out[..., power:, :, column] = coeffs[..., :coeffs.shape[-3] - power, :, column]
    return out


def step_polynomial(w: StepWindow) -> StepPoly:
    """
    Express the TES4SB step as S(W) / Z^7 with S of degree <= 7 in W = Z^2.

    The constant factors are multiplied left to right, interleaved with the
    monomial diagonals diag(W,1), diag(1,W), diag(W^3,1), diag(1,W), diag(W,1).

    Args:
        w: Step window; array entries give one polynomial per node

    Returns:
        StepPoly with coeffs of shape (..., 8, 2, 2) and denom_z_exp = 7
    """
    factors = suzuki_outer_factors(w)
    batch_shape = np.shape(factors[0])[:-2]

    coeffs = np.zeros(batch_shape + (STEP_DEGREE + 1, 2, 2), dtype=np.complex128)
    coeffs[..., 0, :, :] = factors[0]
    for (column, power), factor in zip(SUZUKI_MONOMIALS, factors[1:]):
        coeffs = np.matmul(_times_monomial(coeffs, column, power), factor[..., None, :, :])

    return StepPoly(coeffs=coeffs, denom_z_exp=STEP_DENOM_Z_EXP)


def signal_windows(samples: Union[np.ndarray, list], tau: float, sigma: int) -> StepWindow:
    """
    Windows for every node of a sampled signal.

    Neighbours outside the grid (q_{-1} and q_{M+1}) are taken as zero.

    Args:
        samples: q(t_0) ... q(t_M)
        tau: Grid step
        sigma: Dispersion sign

    Returns:
        StepWindow whose entries are arrays of length M+1
    """
    q = np.asarray(samples, dtype=np.complex128)
    padded = np.concatenate(([0.0], q, [0.0]))
    return StepWindow(q_prev=padded[:-2], q_curr=padded[1:-1], q_next=padded[2:],
                      tau=tau, sigma=sigma)
