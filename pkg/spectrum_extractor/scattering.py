"""
Module for computing the continuous spectrum of a sampled potential.

The state starts as the left Jost solution (exp(-i zeta t), 0) at t = -L - tau/2,
is carried across all M+1 cells and the Jost coefficients are read off at
t = L + tau/2:

    a = psi_1 exp(i zeta t),  b = psi_2 exp(-i zeta t),  r = b / a
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional, Union

import numpy as np
from scipy.integrate import trapezoid

from spectrum_extractor.fastpoly import EvalGrid, evaluate_grid, tree_product
from spectrum_extractor.mat2 import exp_from_parts
from spectrum_extractor.schemes import (
    SUZUKI_A_POWERS,
    central_derivatives,
    edge_matrices,
    signal_windows,
    step_polynomial,
    suzuki_outer_factors,
)

logger = logging.getLogger(__name__)


class Scheme(str, Enum):
    """Available discretizations of the scattering problem."""

    BO = "bo"
    TES4 = "tes4"
    TES4SB = "tes4sb"
    FTES4SB = "ftes4sb"


CONVENTIONAL_SCHEMES = (Scheme.BO, Scheme.TES4, Scheme.TES4SB)


@dataclass(frozen=True)
class Signal:
    """Potential q sampled at t_n = -L + tau n, n = 0..M, tau = 2L/M."""

    samples: np.ndarray
    L: float
    sigma: int = 1

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.complex128)
        if samples.ndim != 1 or samples.size < 3:
            raise ValueError(f"A signal needs M+1 >= 3 samples, got shape {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise ValueError("Signal has non-finite samples")
        if not self.L > 0:
            raise ValueError(f"Half-interval L must be positive, got {self.L}")
        if self.sigma not in (1, -1):
            raise ValueError(f"sigma must be +1 or -1, got {self.sigma}")
        object.__setattr__(self, "samples", samples)

    @property
    def M(self) -> int:
        return self.samples.size - 1

    @property
    def tau(self) -> float:
        return 2.0 * self.L / self.M

    @property
    def times(self) -> np.ndarray:
        return -self.L + self.tau * np.arange(self.M + 1)

    @property
    def edge(self) -> float:
        """Right end L + tau/2 of the span covered by the steps."""
        return self.L + 0.5 * self.tau


@dataclass
class ScatteringResult:
    """Per-point Jost coefficients with run metadata."""

    xi: np.ndarray
    a: np.ndarray
    b: np.ndarray
    r: np.ndarray
    h_err: np.ndarray
    a_zero: np.ndarray
    scheme: str
    M: int
    sigma: int
    wall_time: float = 0.0
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def n_xi(self) -> int:
        return self.xi.size

    @property
    def flagged(self) -> bool:
        return bool(np.any(self.a_zero))


@dataclass(frozen=True)
class ContinuousEnergy:
    """Continuous-spectrum energy; value is NaN when flagged."""

    value: float
    flagged: bool = False


def invariant_error(a, b, sigma: int):
    """
    Deviation |1 - |a|^2 - sigma |b|^2| of the quadratic invariant.

    Args:
        a: Jost coefficient(s) a
        b: Jost coefficient(s) b
        sigma: Dispersion sign

    Returns:
        Non-negative float or array
    """
    return np.abs(1.0 - np.abs(a) ** 2 - sigma * np.abs(b) ** 2)


def _build_result(signal: Signal, xi: np.ndarray, a: np.ndarray, b: np.ndarray,
                  scheme: Scheme, wall_time: float) -> ScatteringResult:
    a_zero = a == 0
    r = np.full(a.shape, np.nan + 1j * np.nan, dtype=np.complex128)
    np.divide(b, a, out=r, where=~a_zero)
    if np.any(a_zero):
        logger.warning(f"a vanishes at {int(a_zero.sum())} spectral point(s); r is undefined there")

    return ScatteringResult(
        xi=xi,
        a=a,
        b=b,
        r=r,
        h_err=invariant_error(a, b, signal.sigma),
        a_zero=a_zero,
        scheme=scheme.value,
        M=signal.M,
        sigma=signal.sigma,
        wall_time=wall_time,
    )


def _apply_stack(matrices: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """Apply one matrix per spectral point to the states psi of shape (n, 2)."""
    return np.matmul(matrices, psi[..., None])[..., 0]


def _propagate(signal: Signal, zeta: np.ndarray, scheme: Scheme) -> np.ndarray:
    """Carry the left Jost state across all cells; returns psi at L + tau/2."""
    tau, sigma = signal.tau, signal.sigma
    windows = signal_windows(signal.samples, tau, sigma)

    psi = np.zeros(zeta.shape + (2,), dtype=np.complex128)
    psi[:, 0] = np.exp(1j * zeta * signal.edge)

    if scheme is Scheme.BO:
        diagonal = -1j * tau * zeta
        for q in windows.q_curr:
            psi = _apply_stack(exp_from_parts(diagonal, tau * q, -sigma * tau * np.conj(q)), psi)

    elif scheme is Scheme.TES4:
        diagonal = -1j * tau * zeta
        e_plus, e_minus = edge_matrices(central_derivatives(windows), tau, sigma)
        e_plus_t = np.swapaxes(e_plus, -1, -2)
        e_minus_t = np.swapaxes(e_minus, -1, -2)
        for n, q in enumerate(windows.q_curr):
            psi = psi @ e_minus_t[n]
            psi = _apply_stack(exp_from_parts(diagonal, tau * q, -sigma * tau * np.conj(q)), psi)
            psi = psi @ e_plus_t[n]

    elif scheme is Scheme.TES4SB:
        # Within a step psi is held as (u_0 Z^p, u_1 Z^-p); the A-exponentials
        # only move p and the frame is folded back into u once per node.
        factors_t = [np.swapaxes(f, -1, -2) for f in suzuki_outer_factors(windows)]
        offsets = np.cumsum(SUZUKI_A_POWERS[::-1])
        twist = {p: (np.exp(-2j * tau * p * zeta / 3.0), np.exp(2j * tau * p * zeta / 3.0))
                 for p in set(offsets) if p != 0}
        ordered = list(zip(offsets, reversed(factors_t[:-1])))
        node_phase = np.exp(-1j * tau * offsets[-1] * zeta / 3.0)
        node_phase_inv = np.exp(1j * tau * offsets[-1] * zeta / 3.0)
        last_t = factors_t[-1]
        for n in range(signal.M + 1):
            psi = psi @ last_t[n]
            for offset, factor_t in ordered:
                f = factor_t[n]
                if offset == 0:
                    psi = psi @ f
                    continue
                g, g_inv = twist[offset]
                u0, u1 = psi[:, 0], psi[:, 1]
                psi = np.stack((u0 * f[0, 0] + u1 * g_inv * f[1, 0],
                                u0 * g * f[0, 1] + u1 * f[1, 1]), axis=-1)
            psi[:, 0] *= node_phase
            psi[:, 1] *= node_phase_inv

    else:
        raise ValueError(f"Scheme {scheme.value} is not a conventional scheme")

    return psi


def run_conventional(s: Signal, grid: EvalGrid, scheme: Union[Scheme, str],
                     zeta_override: Optional[np.ndarray] = None, threads: int = 1) -> ScatteringResult:
    """
    Compute a, b, r and the invariant error step by step for every spectral point.

    Args:
        s: Sampled potential
        grid: Spectral grid (real xi)
        scheme: One of bo, tes4, tes4sb
        zeta_override: Optional complex spectral points used instead of grid.xi
        threads: Worker threads; the spectral points are split into chunks

    Returns:
        ScatteringResult

    Raises:
        ValueError: For an unknown or non-conventional scheme, or an empty grid
    """
    scheme = Scheme(scheme)
    if scheme not in CONVENTIONAL_SCHEMES:
        raise ValueError(f"run_conventional does not handle scheme {scheme.value}")

    if zeta_override is None:
        xi = grid.xi
        zeta = xi.astype(np.complex128)
    else:
        zeta = np.atleast_1d(np.asarray(zeta_override, dtype=np.complex128))
        if zeta.size == 0:
            raise ValueError("zeta_override must not be empty")
        xi = zeta

    logger.info(f"Running {scheme.value} on M={s.M}, N={zeta.size}, sigma={s.sigma}")
    start = time.perf_counter()

    if threads > 1 and zeta.size > 1:
        chunks = np.array_split(zeta, min(threads, zeta.size))
        with ThreadPoolExecutor(max_workers=threads) as pool:
            psi = np.concatenate(list(pool.map(lambda z: _propagate(s, z, scheme), chunks)))
    else:
        psi = _propagate(s, zeta, scheme)

    a = psi[:, 0] * np.exp(1j * zeta * s.edge)
    b = psi[:, 1] * np.exp(-1j * zeta * s.edge)
    wall_time = time.perf_counter() - start

    logger.info(f"{scheme.value} finished in {wall_time:.3f} s")
    return _build_result(s, xi, a, b, scheme, wall_time)


def run_fast(s: Signal, grid: EvalGrid, workers: int = 1) -> ScatteringResult:
    """
    FTES4SB: the TES4SB transfer matrix of the whole signal as one polynomial.

    Step polynomials of all nodes are multiplied in a binary tree and the
    product is evaluated on the grid; the Z-denominator and the boundary phases
    are applied at evaluation.

    Args:
        s: Sampled potential
        grid: Real spectral grid
        workers: Threads for the FFTs

    Returns:
        ScatteringResult
    """
    logger.info(f"Running ftes4sb on M={s.M}, N={len(grid)}, sigma={s.sigma}")
    start = time.perf_counter()

    steps = step_polynomial(signal_windows(s.samples, s.tau, s.sigma))
    total = tree_product(steps, workers=workers)
    transfer = evaluate_grid(total, grid.with_tau(s.tau), workers=workers)

    xi = grid.xi
    a = transfer[:, 0, 0] * np.exp(2j * xi * s.edge)
    b = transfer[:, 1, 0].copy()
    wall_time = time.perf_counter() - start

    logger.info(f"ftes4sb finished in {wall_time:.3f} s (polynomial degree {total.degree})")
    return _build_result(s, xi, a, b, Scheme.FTES4SB, wall_time)


def run_scheme(s: Signal, grid: EvalGrid, scheme: Union[Scheme, str], threads: int = 1) -> ScatteringResult:
    """Dispatch to run_fast for ftes4sb and to run_conventional otherwise."""
    scheme = Scheme(scheme)
    if scheme is Scheme.FTES4SB:
        return run_fast(s, grid, workers=threads)
    return run_conventional(s, grid, scheme, threads=threads)


def continuous_energy(res: ScatteringResult, sigma: Optional[int] = None) -> ContinuousEnergy:
    """
    Continuous-spectrum energy (sigma/pi) * integral of ln(1 + sigma |r|^2) d xi.

    The integral is the trapezoid rule on the result's own grid. For sigma = -1
    the logarithm needs |r| < 1 everywhere; otherwise the estimate is flagged.

    Args:
        res: Scattering result on a real, increasing grid
        sigma: Dispersion sign (defaults to the result's)

    Returns:
        ContinuousEnergy
    """
    sigma = res.sigma if sigma is None else sigma
    if sigma not in (1, -1):
        raise ValueError(f"sigma must be +1 or -1, got {sigma}")
    if res.flagged or not np.all(np.isfinite(res.r)):
        logger.warning("Reflection coefficient is undefined on part of the grid")
        return ContinuousEnergy(value=float("nan"), flagged=True)

    r2 = np.abs(res.r) ** 2
    if sigma == -1 and np.any(r2 >= 1.0):
        logger.warning(f"|r| >= 1 at {int(np.sum(r2 >= 1.0))} point(s) with sigma = -1")
        return ContinuousEnergy(value=float("nan"), flagged=True)

    if res.n_xi == 1:
        return ContinuousEnergy(value=0.0)
    xi = np.real(res.xi)
    value = sigma / np.pi * trapezoid(np.log1p(sigma * r2), xi)
    return ContinuousEnergy(value=float(value))
