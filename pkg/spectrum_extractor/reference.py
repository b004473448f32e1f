"""
Module for reference spectra and error metrics.

Provides the chirped hyperbolic secant test signal, a Richardson-extrapolated
brute-force oracle, the closed-form spectrum of the chirped secant (used only
after it has been checked against the oracle), the scaled RMSE and energy
error metrics, and the convergence-order harness built on them.
"""

import functools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import trapezoid
from scipy.special import loggamma, rgamma

from spectrum_extractor.fastpoly import EvalGrid
from spectrum_extractor.scattering import (
    Scheme,
    Signal,
    continuous_energy,
    run_conventional,
    run_scheme,
)

logger = logging.getLogger(__name__)

# Below this RMSE the error is treated as roundoff and excluded from slopes
ROUNDOFF_FLOOR = 1e-12

# Oracle check of the closed-form chirped-secant spectrum
GATE_M = 2 ** 14
GATE_L = 30.0
GATE_XI = (-20.0, 20.0, 41)
GATE_ORACLE_TOLERANCE = 1e-8
GATE_MAX_DEVIATION = 1e-6


class AnalyticGateError(RuntimeError):
    """The closed-form spectrum disagrees with the brute-force oracle."""

    def __init__(self, message: str, deviation: float):
        super().__init__(message)
        self.deviation = deviation


@dataclass(frozen=True)
class ChirpedSechSpec:
    """q(t) = A sech(t)^(1 + iC) sampled on M+1 points of [-L, L]."""

    A: float
    C: float
    L: float = 30.0
    M: int = 4096

    def __post_init__(self):
        if not self.A > 0:
            raise ValueError(f"Amplitude A must be positive, got {self.A}")
        if not self.L > 0:
            raise ValueError(f"Half-interval L must be positive, got {self.L}")
        if self.M < 2:
            raise ValueError(f"M must be >= 2, got {self.M}")


def chirped_sech_signal(spec: ChirpedSechSpec, sigma: int = 1) -> Signal:
    """
    Sample A sech(t)^(1+iC) = A sech(t) exp(iC ln sech(t)) at t_n = -L + tau n.

    ln sech(t) is taken as ln 2 - logaddexp(t, -t), which stays finite for
    any t.

    Args:
        spec: Signal parameters
        sigma: Dispersion sign stored with the signal

    Returns:
        Signal with M+1 samples
    """
    t = -spec.L + (2.0 * spec.L / spec.M) * np.arange(spec.M + 1)
    log_sech = np.log(2.0) - np.logaddexp(t, -t)
    samples = spec.A * np.exp((1.0 + 1j * spec.C) * log_sech)
    return Signal(samples=samples, L=spec.L, sigma=sigma)


def zero_signal(L: float, M: int, sigma: int = 1) -> Signal:
    """The potential q = 0 on M+1 points."""
    return Signal(samples=np.zeros(M + 1, dtype=np.complex128), L=L, sigma=sigma)


def signal_energy(s: Signal) -> float:
    """Trapezoid estimate of the integral of |q|^2 over [-L, L]."""
    return float(trapezoid(np.abs(s.samples) ** 2, s.times))


@dataclass
class OracleSpectrum:
    """Richardson-extrapolated TES4 spectrum with its error estimate."""

    xi: np.ndarray
    a: np.ndarray
    b: np.ndarray
    error: np.ndarray
    converged: bool
    tolerance: float

    @property
    def r(self) -> np.ndarray:
        return self.b / self.a


def oracle_spectrum(s: Signal, grid: EvalGrid, tolerance: float = 1e-8, threads: int = 1) -> OracleSpectrum:
    """
    Brute-force spectrum from TES4 at M and M/2 combined by Richardson extrapolation.

    The coarse run uses every other sample of s, so both runs share the same
    nodes. The estimate |v_M - v_{M/2}| is reported per point; the oracle is
    marked not converged when it exceeds the tolerance anywhere.

    Args:
        s: Signal at the fine resolution (M even, M >= 4)
        grid: Real spectral grid
        tolerance: Target for the error estimate
        threads: Worker threads for each TES4 run

    Returns:
        OracleSpectrum
    """
    if s.M % 2 or s.M < 4:
        raise ValueError(f"The oracle needs an even M >= 4, got {s.M}")

    coarse_signal = Signal(samples=s.samples[::2], L=s.L, sigma=s.sigma)
    logger.info(f"Oracle: TES4 at M={s.M} and M={coarse_signal.M}")
    fine = run_conventional(s, grid, Scheme.TES4, threads=threads)
    coarse = run_conventional(coarse_signal, grid, Scheme.TES4, threads=threads)

    a = (16.0 * fine.a - coarse.a) / 15.0
    b = (16.0 * fine.b - coarse.b) / 15.0
    error = np.maximum(np.abs(fine.a - coarse.a), np.abs(fine.b - coarse.b))
    converged = bool(np.all(error <= tolerance))
    if not converged:
        logger.warning(f"Oracle not converged: error estimate {error.max():.3e} > {tolerance:.1e}")

    return OracleSpectrum(xi=grid.xi, a=a, b=b, error=error, converged=converged, tolerance=tolerance)


def _chirp_parameter(A: float, C: float, sigma: int) -> complex:
    return np.sqrt(complex(sigma * A * A - C * C / 4.0))


def _closed_form_sech(A: float, C: float, xi: np.ndarray, sigma: int) -> Tuple[np.ndarray, np.ndarray]:
    d = _chirp_parameter(A, C, sigma)
    xi = np.asarray(xi, dtype=np.complex128)
    half_chirp = 0.5j * C

    left = 0.5 - 1j * xi - half_chirp
    log_a = (loggamma(left) + loggamma(0.5 - 1j * xi + half_chirp)
             - loggamma(0.5 - 1j * xi - d) - loggamma(0.5 - 1j * xi + d))
    a = np.exp(log_a)

    numerator = np.exp(loggamma(left) + loggamma(0.5 + 1j * xi - half_chirp))
    b = numerator * rgamma(-half_chirp + d) * rgamma(-half_chirp - d) / (A * 2.0 ** (1j * C))
    return a, b


@functools.lru_cache(maxsize=None)
def _validated_gate(A: float, C: float, sigma: int) -> float:
    spec = ChirpedSechSpec(A=A, C=C, L=GATE_L, M=GATE_M)
    grid = EvalGrid.linspace(*GATE_XI)
    logger.info(f"Checking the closed-form spectrum (A={A}, C={C}, sigma={sigma}) against the oracle")

    oracle = oracle_spectrum(chirped_sech_signal(spec, sigma), grid, tolerance=GATE_ORACLE_TOLERANCE)
    a, b = _closed_form_sech(A, C, grid.xi, sigma)
    deviation = max(float(np.max(_scaled_deviation(a, oracle.a))),
                    float(np.max(_scaled_deviation(b, oracle.b))))

    if deviation > GATE_MAX_DEVIATION:
        raise AnalyticGateError(
            f"Closed-form spectrum deviates from the oracle by {deviation:.3e} "
            f"(limit {GATE_MAX_DEVIATION:.0e}) for A={A}, C={C}, sigma={sigma}",
            deviation,
        )
    logger.info(f"Closed-form spectrum accepted, max deviation {deviation:.3e}")
    return deviation


def analytic_spectrum_sech(A: float, C: float, xi: Union[np.ndarray, Sequence[float]], sigma: int = 1,
                           validate: bool = True) -> Tuple[np.ndarray, np.ndarray]:
    """
    Closed-form a(xi), b(xi) of q = A sech(t)^(1+iC) on the whole real line.

    With D = sqrt(sigma A^2 - C^2/4) both are ratios of Gamma functions. The
    first call per (A, C, sigma) compares them with the oracle; a mismatch
    raises instead of handing back a wrong reference.

    Args:
        A: Amplitude (> 0)
        C: Chirp
        xi: Real spectral points
        sigma: Dispersion sign
        validate: Run the oracle check first

    Returns:
        Tuple (a, b) of complex arrays

    Raises:
        AnalyticGateError: If the oracle check fails
    """
    if not A > 0:
        raise ValueError(f"Amplitude A must be positive, got {A}")
    if sigma not in (1, -1):
        raise ValueError(f"sigma must be +1 or -1, got {sigma}")
    if validate:
        _validated_gate(float(A), float(C), int(sigma))
    return _closed_form_sech(A, C, np.atleast_1d(np.asarray(xi, dtype=np.float64)), sigma)


def exact_continuous_energy(A: float, C: float, sigma: int = 1) -> float:
    """
    Continuous-spectrum energy of A sech(t)^(1+iC) from the trace formula.

    The total energy is 2 A^2. For sigma = +1 the eigenvalues i(D - 1/2 - n)
    with positive imaginary part each carry 4 (D - 1/2 - n); for sigma = -1
    there is no discrete spectrum.
    """
    total = 2.0 * A * A
    if sigma == -1:
        return total
    d_squared = A * A - C * C / 4.0
    if d_squared <= 0:
        return total
    d = np.sqrt(d_squared)
    heights = d - 0.5 - np.arange(int(np.ceil(d)) + 1)
    return float(total - 4.0 * np.sum(heights[heights > 0]))


def _phi0(exact: np.ndarray) -> np.ndarray:
    magnitude = np.abs(exact)
    return np.where(magnitude > 1.0, magnitude, 1.0)


def _scaled_deviation(comp: np.ndarray, exact: np.ndarray) -> np.ndarray:
    return np.abs(np.asarray(comp) - np.asarray(exact)) / _phi0(np.asarray(exact))


def error_ec(ec_comp: float, ec_exact: float) -> float:
    """|E_comp - E_exact| / phi0, phi0 = E_exact if |E_exact| > 1 else 1."""
    return float(_scaled_deviation(ec_comp, ec_exact))


def rmse(comp: Union[np.ndarray, Sequence], exact: Union[np.ndarray, Sequence]) -> float:
    """
    Root mean squared error scaled pointwise by phi0.

    phi0 is |exact| where it exceeds one and 1 elsewhere.

    Raises:
        ValueError: If the arrays differ in length or are empty
    """
    comp = np.atleast_1d(np.asarray(comp))
    exact = np.atleast_1d(np.asarray(exact))
    if comp.shape != exact.shape:
        raise ValueError(f"Length mismatch: {comp.shape} vs {exact.shape}")
    if comp.size == 0:
        raise ValueError("rmse needs at least one point")
    return float(np.sqrt(np.mean(_scaled_deviation(comp, exact) ** 2)))


@dataclass
class ConvergenceRow:
    scheme: str
    M: int
    rmse_a: float
    rmse_b: float
    rmse_r: float
    rmse_h: float
    max_h_err: float
    error_ec: float
    wall_time: float
    flagged: bool = False


@dataclass
class ConvergenceReport:
    """Errors of every (scheme, M) cell against one reference spectrum."""

    reference: str
    sigma: int
    rows: List[ConvergenceRow] = field(default_factory=list)
    reference_converged: bool = True

    @property
    def flagged(self) -> bool:
        """True when the reference did not converge or any cell raised a flag."""
        return not self.reference_converged or any(row.flagged for row in self.rows)

    @property
    def schemes(self) -> List[str]:
        seen: Dict[str, None] = {}
        for row in self.rows:
            seen.setdefault(row.scheme, None)
        return list(seen)

    def rows_for(self, scheme: Union[Scheme, str]) -> List[ConvergenceRow]:
        name = Scheme(scheme).value
        return sorted((row for row in self.rows if row.scheme == name), key=lambda row: row.M)

    def slopes(self, scheme: Union[Scheme, str], metric: str = "rmse_a") -> List[Optional[float]]:
        """
        Observed order between successive M: -log2(e2/e1) / log2(M2/M1).

        A slope is None when either error is at or below ROUNDOFF_FLOOR.
        """
        rows = self.rows_for(scheme)
        result: List[Optional[float]] = []
        for lo, hi in zip(rows, rows[1:]):
            e1, e2 = getattr(lo, metric), getattr(hi, metric)
            if not (e1 > ROUNDOFF_FLOOR and e2 > ROUNDOFF_FLOOR):
                result.append(None)
                continue
            result.append(float(-np.log2(e2 / e1) / np.log2(hi.M / lo.M)))
        return result

    def fitted_slope(self, scheme: Union[Scheme, str], metric: str = "rmse_a") -> Optional[float]:
        """Least-squares order over the cells above the roundoff floor."""
        rows = [row for row in self.rows_for(scheme) if getattr(row, metric) > ROUNDOFF_FLOOR]
        if len(rows) < 2:
            logger.warning(f"Slope of {metric} for {Scheme(scheme).value} is undefined "
                           f"({len(rows)} cell(s) above the roundoff floor)")
            return None
        log_m = np.log2([row.M for row in rows])
        log_e = np.log2([getattr(row, metric) for row in rows])
        return float(-np.polyfit(log_m, log_e, 1)[0])


SignalSource = Union[ChirpedSechSpec, Callable[[int], Signal]]


def _signal_at(source: SignalSource, M: int, sigma: int) -> Signal:
    if isinstance(source, ChirpedSechSpec):
        return chirped_sech_signal(replace(source, M=M), sigma)
    s = source(M)
    if s.M != M:
        raise ValueError(f"Signal factory returned M={s.M} for requested M={M}")
    return s


def _check_m_list(M_list: Sequence[int]) -> List[int]:
    values = [int(m) for m in M_list]
    if len(values) < 3:
        raise ValueError(f"A convergence study needs at least 3 values of M, got {len(values)}")
    if any(m < 2 for m in values):
        raise ValueError(f"Every M must be >= 2, got {values}")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ValueError(f"M values must be strictly increasing, got {values}")
    return values


def convergence_study(
    spec: SignalSource,
    grid: EvalGrid,
    schemes: Sequence[Union[Scheme, str]],
    M_list: Sequence[int],
    sigma: int = 1,
    reference: str = "analytic",
    threads: int = 1,
    oracle_M: Optional[int] = None,
) -> ConvergenceReport:
    """
    Run every scheme at every M and measure it against one reference spectrum.

    Args:
        spec: ChirpedSechSpec, or a callable M -> Signal for other potentials
        grid: Real spectral grid
        schemes: Schemes to study
        M_list: Strictly increasing resolutions, at least three
        sigma: Dispersion sign
        reference: "analytic" (closed form, chirped secant only) or "oracle"
        threads: Cells run concurrently on this many threads
        oracle_M: Fine resolution of the oracle (default 4 * max(M_list))

    Returns:
        ConvergenceReport with rows in (scheme, M) order
    """
    M_list = _check_m_list(M_list)
    schemes = [Scheme(s) for s in schemes]
    if not schemes:
        raise ValueError("A convergence study needs at least one scheme")

    if reference == "analytic":
        if not isinstance(spec, ChirpedSechSpec):
            raise ValueError("The analytic reference is only available for the chirped secant")
        reference_converged = True
        exact_a, exact_b = analytic_spectrum_sech(spec.A, spec.C, grid.xi, sigma)
    elif reference == "oracle":
        fine_M = oracle_M or 4 * M_list[-1]
        oracle = oracle_spectrum(_signal_at(spec, fine_M, sigma), grid, threads=threads)
        exact_a, exact_b = oracle.a, oracle.b
        reference_converged = oracle.converged
    else:
        raise ValueError(f"Unknown reference '{reference}', expected 'analytic' or 'oracle'")
    exact_r = exact_b / exact_a

    ec_exact = None
    if isinstance(spec, ChirpedSechSpec):
        ec_exact = exact_continuous_energy(spec.A, spec.C, sigma)

    cells = [(scheme, m) for scheme in schemes for m in M_list]
    logger.info(f"Convergence study: {len(cells)} cells, reference={reference}, sigma={sigma}")

    def run_cell(cell: Tuple[Scheme, int]) -> ConvergenceRow:
        scheme, m = cell
        res = run_scheme(_signal_at(spec, m, sigma), grid, scheme)
        energy = continuous_energy(res)
        cell_error_ec = float("nan")
        if ec_exact is not None and not energy.flagged:
            cell_error_ec = error_ec(energy.value, ec_exact)
        row = ConvergenceRow(
            scheme=scheme.value,
            M=m,
            rmse_a=rmse(res.a, exact_a),
            rmse_b=rmse(res.b, exact_b),
            rmse_r=rmse(res.r, exact_r),
            rmse_h=rmse(res.h_err, np.zeros_like(res.h_err)),
            max_h_err=float(np.max(res.h_err)),
            error_ec=cell_error_ec,
            wall_time=res.wall_time,
            flagged=res.flagged or energy.flagged,
        )
        logger.debug(f"{scheme.value} M={m}: rmse_a={row.rmse_a:.3e} rmse_b={row.rmse_b:.3e}")
        return row

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(run_cell, cells))
    else:
        rows = [run_cell(cell) for cell in cells]

    report = ConvergenceReport(reference=reference, sigma=sigma, rows=rows,
                               reference_converged=reference_converged)
    for scheme in schemes:
        slope = report.fitted_slope(scheme, "rmse_a")
        if slope is not None:
            logger.info(f"{scheme.value}: fitted order {slope:.2f}")
    return report
