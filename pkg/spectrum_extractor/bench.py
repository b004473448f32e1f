"""
Module for timing the scattering schemes.
"""

import logging
import statistics
import time
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Sequence, Union

from spectrum_extractor.fastpoly import EvalGrid
from spectrum_extractor.reference import ChirpedSechSpec, chirped_sech_signal
from spectrum_extractor.scattering import Scheme, run_scheme

logger = logging.getLogger(__name__)

MIN_REPEATS = 3


@dataclass
class Timing:
    median: float
    samples: List[float]


def time_call(func: Callable[[], Any], repeats: int = MIN_REPEATS) -> Timing:
    """
    Time a zero-argument callable.

    One warmup call is discarded, then the median of `repeats` timed calls
    on the monotonic performance counter is reported.

    Args:
        func: Callable to time
        repeats: Number of timed calls (at least 3)

    Returns:
        Timing with the median and every sample in seconds
    """
    if repeats < MIN_REPEATS:
        raise ValueError(f"Timing needs at least {MIN_REPEATS} repeats, got {repeats}")
    func()
    samples = []
    for _ in range(repeats):
        start = time.perf_counter()
        func()
        samples.append(time.perf_counter() - start)
    return Timing(median=statistics.median(samples), samples=samples)


def bench_schemes(
    spec: ChirpedSechSpec,
    grid: EvalGrid,
    schemes: Sequence[Union[Scheme, str]],
    M_list: Sequence[int],
    sigma: int = 1,
    repeats: int = MIN_REPEATS,
    threads: int = 1,
) -> List[Dict[str, Any]]:
    """
    Median wall time of every (scheme, M) at a fixed spectral grid.

    Signals are built before timing; only the scattering call is measured.

    Returns:
        Rows with keys scheme, M, N, sigma, median_time, repeats
    """
    rows = []
    for M in M_list:
        s = chirped_sech_signal(ChirpedSechSpec(A=spec.A, C=spec.C, L=spec.L, M=M), sigma)
        for scheme in (Scheme(name) for name in schemes):
            timing = time_call(lambda: run_scheme(s, grid, scheme, threads=threads), repeats)
            logger.info(f"{scheme.value} M={M}: median {timing.median:.4f} s over {repeats} runs")
            rows.append({
                "scheme": scheme.value,
                "M": M,
                "N": len(grid),
                "sigma": sigma,
                "median_time": timing.median,
                "repeats": repeats,
            })
    return rows
