#!/usr/bin/env python3
"""
ZS Spectrum Extractor

A command-line tool to compute the continuous spectrum (Jost coefficients a, b
and the reflection coefficient r) of a sampled potential for the
Zakharov-Shabat problem, and to study the accuracy and speed of the schemes.
"""

import argparse
import logging
import os
import sys
from typing import List, Optional

import numpy as np

from spectrum_extractor.bench import bench_schemes
from spectrum_extractor.config import (
    DEFAULT_M_LIST,
    RunConfig,
    format_scheme_list,
    parse_m_list,
    parse_schemes,
)
from spectrum_extractor.reference import (
    ChirpedSechSpec,
    chirped_sech_signal,
    convergence_study,
    error_ec,
    exact_continuous_energy,
    zero_signal,
)
from spectrum_extractor.scattering import Scheme, Signal, continuous_energy, run_scheme
from spectrum_extractor.signal_io import (
    SpectrumCSVParser,
    build_summary,
    write_bench,
    write_convergence,
    write_invariant_table,
    write_json,
    write_signal,
    write_spectrum,
)

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def _add_common_arguments(parser: argparse.ArgumentParser) -> None:
    defaults = RunConfig()
    parser.add_argument(
        "--sigma",
        type=int,
        choices=[1, -1],
        default=defaults.sigma,
        help="Dispersion sign: +1 anomalous (focusing), -1 normal (default: +1)"
    )
    parser.add_argument(
        "--scheme",
        type=str,
        default=defaults.scheme.value,
        help=f"Scheme: {', '.join(s.value for s in Scheme)} (default: {defaults.scheme.value})"
    )
    parser.add_argument("--xi-min", type=float, default=defaults.xi_min, help="Lower end of the xi grid")
    parser.add_argument("--xi-max", type=float, default=defaults.xi_max, help="Upper end of the xi grid")
    parser.add_argument("--n-xi", type=int, default=defaults.n_xi, help="Number of xi points (default: 1025)")
    parser.add_argument("--M", type=int, default=defaults.M, help="Number of time steps, M+1 samples")
    parser.add_argument("--L", type=float, default=defaults.L, help="Half-interval [-L, L] (default: 30)")
    parser.add_argument("--A", type=float, default=defaults.A, help="Chirped secant amplitude (default: 5.2)")
    parser.add_argument("--C", type=float, default=defaults.C, help="Chirped secant chirp (default: 4)")
    parser.add_argument("--repeats", type=int, default=defaults.repeats, help="Timed repeats (default: 3)")
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help="Worker threads (default: $SPECTRUM_EXTRACTOR_THREADS or 1)"
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="Enable debug logging")


def parse_arguments(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """Parse command line arguments."""
    parser = argparse.ArgumentParser(
        description="Compute the continuous nonlinear Fourier spectrum of a sampled signal.",
        epilog=format_scheme_list(list(Scheme)),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    synth = subparsers.add_parser("synth", help="Write a test signal to a CSV file")
    synth.add_argument("kind", choices=["chirped-sech", "zero"], help="Signal to synthesize")
    synth.add_argument("-o", "--out", type=str, required=True, help="Output signal CSV")
    _add_common_arguments(synth)

    compute = subparsers.add_parser("compute", help="Compute a, b, r for one scheme")
    compute.add_argument("-i", "--input", type=str, default=None,
                         help="Signal CSV (default: chirped secant from --A, --C, --L, --M)")
    compute.add_argument("-o", "--out", type=str, default="spectrum.csv", help="Output spectrum CSV")
    compute.add_argument("--summary", type=str, default=None,
                         help="Output JSON summary (default: next to --out with .json suffix)")
    _add_common_arguments(compute)

    for name, help_text in (("convergence", "Error and observed order against a reference"),
                            ("bench", "Median wall time per scheme and M")):
        sub = subparsers.add_parser(name, help=help_text)
        sub.add_argument("--M-list", type=str, default=DEFAULT_M_LIST,
                         help=f"Comma-separated resolutions (default: {DEFAULT_M_LIST})")
        sub.add_argument("--schemes", type=str, default=",".join(s.value for s in Scheme),
                         help="Comma-separated schemes (default: all)")
        sub.add_argument("-o", "--out", type=str, default=f"{name}.csv", help="Output CSV")
        _add_common_arguments(sub)
    subparsers.choices["convergence"].add_argument(
        "--reference",
        choices=["analytic", "oracle"],
        default="analytic",
        help="Reference spectrum (default: analytic)"
    )

    invariant = subparsers.add_parser("invariant", help="Invariant error of every scheme on one signal")
    invariant.add_argument("-i", "--input", type=str, default=None, help="Signal CSV (default: chirped secant)")
    invariant.add_argument("-o", "--out", type=str, default="invariant.csv", help="Output CSV")
    _add_common_arguments(invariant)

    return parser.parse_args(argv)


def load_signal(config: RunConfig) -> Signal:
    """Read the input file if given, otherwise synthesize the chirped secant."""
    if config.input_path:
        return SpectrumCSVParser(config.input_path).read_signal(sigma=config.sigma)
    spec = ChirpedSechSpec(A=config.A, C=config.C, L=config.L, M=config.M)
    logger.info(f"Synthesizing chirped secant A={spec.A}, C={spec.C}, L={spec.L}, M={spec.M}")
    return chirped_sech_signal(spec, config.sigma)


def cmd_synth(args: argparse.Namespace, config: RunConfig) -> int:
    if args.kind == "zero":
        s = zero_signal(config.L, config.M, config.sigma)
    else:
        s = chirped_sech_signal(ChirpedSechSpec(A=config.A, C=config.C, L=config.L, M=config.M), config.sigma)
    write_signal(s, config.output_path)
    logger.info(f"Wrote {args.kind} signal with {s.M + 1} samples to {config.output_path}")
    return 0


def cmd_compute(args: argparse.Namespace, config: RunConfig) -> int:
    s = load_signal(config)
    res = run_scheme(s, config.grid(), config.scheme, threads=config.threads)
    res.metadata["L"] = s.L
    energy = continuous_energy(res)

    ec_exact = error = None
    if not config.input_path:
        ec_exact = exact_continuous_energy(config.A, config.C, config.sigma)
        if not energy.flagged:
            error = error_ec(energy.value, ec_exact)

    write_spectrum(res, config.output_path)
    summary_path = args.summary or os.path.splitext(config.output_path)[0] + ".json"
    write_json(build_summary(res, energy, ec_exact, error), summary_path)

    logger.info(f"Max invariant error {np.max(res.h_err):.3e}, E_c = {energy.value:.10g}")
    if res.flagged or energy.flagged:
        logger.warning("Outputs written, but the run raised validation flags")
        return 1
    return 0


def cmd_convergence(args: argparse.Namespace, config: RunConfig) -> int:
    spec = ChirpedSechSpec(A=config.A, C=config.C, L=config.L, M=config.M)
    report = convergence_study(
        spec,
        config.grid(),
        parse_schemes(args.schemes),
        parse_m_list(args.M_list),
        sigma=config.sigma,
        reference=args.reference,
        threads=config.threads,
    )
    write_convergence(report, config.output_path, os.path.splitext(config.output_path)[0] + ".json")

    undefined = [s for s in report.schemes if report.fitted_slope(s, "rmse_a") is None]
    if undefined:
        logger.warning(f"Order undefined for: {', '.join(undefined)}")
        return 1
    if report.flagged:
        logger.warning("Outputs written, but the reference or a cell raised validation flags")
        return 1
    return 0


def cmd_bench(args: argparse.Namespace, config: RunConfig) -> int:
    spec = ChirpedSechSpec(A=config.A, C=config.C, L=config.L, M=config.M)
    rows = bench_schemes(
        spec,
        config.grid(),
        parse_schemes(args.schemes),
        parse_m_list(args.M_list),
        sigma=config.sigma,
        repeats=config.repeats,
        threads=config.threads,
    )
    write_bench(rows, config.output_path)
    return 0


def cmd_invariant(args: argparse.Namespace, config: RunConfig) -> int:
    s = load_signal(config)
    grid = config.grid()
    h_err = {}
    flagged = []
    for scheme in Scheme:
        res = run_scheme(s, grid, scheme, threads=config.threads)
        h_err[scheme.value] = res.h_err
        if res.flagged:
            flagged.append(scheme.value)
        logger.info(f"{scheme.value}: max invariant error {np.max(res.h_err):.3e}")
    write_invariant_table(grid.xi, h_err, config.output_path)
    if flagged:
        logger.warning(f"Outputs written, but a vanishes for: {', '.join(flagged)}")
        return 1
    return 0


COMMANDS = {
    "synth": cmd_synth,
    "compute": cmd_compute,
    "convergence": cmd_convergence,
    "bench": cmd_bench,
    "invariant": cmd_invariant,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point for the application."""
    try:
        args = parse_arguments(argv)
    except SystemExit as e:
        return int(e.code or 0)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format=LOG_FORMAT
    )

    try:
        config = RunConfig.from_args(args)
        return COMMANDS[args.command](args, config)
    except Exception as e:
        logger.error(f"Error: {str(e)}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
