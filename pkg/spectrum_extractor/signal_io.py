"""
Module for reading and writing signal, spectrum and report files.

All CSV floats are written with 17 significant digits so a file read back
gives the same float64 values.
"""

import csv
import json
import logging
import math
from typing import Any, Dict, List, Mapping, Optional, Sequence

import numpy as np

from spectrum_extractor.reference import ConvergenceReport
from spectrum_extractor.scattering import ContinuousEnergy, ScatteringResult, Signal

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1

SIGNAL_HEADER = ["t", "q_re", "q_im"]
SPECTRUM_HEADER = ["xi", "a_re", "a_im", "b_re", "b_im", "r_re", "r_im", "h_err"]
INVARIANT_HEADER = ["xi", "h_err_bo", "h_err_tes4", "h_err_tes4sb", "h_err_ftes4sb"]
CONVERGENCE_HEADER = ["scheme", "M", "rmse_a", "rmse_b", "rmse_r", "rmse_h",
                      "max_h_err", "error_ec", "wall_time"]
BENCH_HEADER = ["scheme", "M", "N", "sigma", "median_time", "repeats"]

# Relative tolerance on the spacing of the time column
TIME_GRID_RTOL = 1e-9


def format_float(x: float) -> str:
    return f"{float(x):.17g}"


def _json_value(value: Any) -> Any:
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, dict):
        return {k: _json_value(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_value(v) for v in value]
    return value


def write_json(data: Mapping[str, Any], path: str) -> None:
    """Write a JSON document; non-finite floats become null."""
    with open(path, "w", encoding="utf-8") as file:
        json.dump(_json_value(dict(data)), file, indent=2)
        file.write("\n")
    logger.info(f"Wrote {path}")


class SpectrumCSVParser:
    """Read signal and spectrum CSV files."""

    def __init__(self, csv_path: str):
        """
        Initialize the parser with the path to a CSV file.

        Args:
            csv_path: Path to a signal or spectrum CSV file
        """
        self.csv_path = csv_path

    def _read_rows(self, header: List[str]) -> List[List[str]]:
        with open(self.csv_path, "r", encoding="utf-8", newline="") as file:
            reader = csv.reader(file)
            first_row = next(reader, None)
            if first_row != header:
                raise ValueError(f"{self.csv_path}: expected header {','.join(header)}, got {first_row}")
            rows = [row for row in reader if row]

        for number, row in enumerate(rows, start=2):
            if len(row) != len(header):
                raise ValueError(f"{self.csv_path}:{number}: expected {len(header)} fields, got {len(row)}")
        return rows

    def read_signal(self, sigma: int = 1) -> Signal:
        """
        Read a `t,q_re,q_im` file.

        The times must be t_n = -L + tau n with tau = 2L/M; L is taken as -t_0.

        Args:
            sigma: Dispersion sign attached to the signal

        Returns:
            Signal

        Raises:
            ValueError: If the header, field count or time grid is wrong
        """
        logger.info(f"Reading signal from {self.csv_path}")
        rows = self._read_rows(SIGNAL_HEADER)
        values = np.array([[float(x) for x in row] for row in rows], dtype=np.float64)
        if values.shape[0] < 3:
            raise ValueError(f"{self.csv_path}: a signal needs at least 3 samples")

        t = values[:, 0]
        L = -t[0]
        M = t.size - 1
        if not L > 0:
            raise ValueError(f"{self.csv_path}: first time must be negative, got {t[0]}")
        expected = -L + (2.0 * L / M) * np.arange(M + 1)
        if not np.allclose(t, expected, rtol=0.0, atol=TIME_GRID_RTOL * L):
            raise ValueError(f"{self.csv_path}: times are not an equispaced grid on [-L, L]")

        s = Signal(samples=values[:, 1] + 1j * values[:, 2], L=L, sigma=sigma)
        logger.info(f"Read signal with M={s.M}, L={s.L}")
        return s

    def read_spectrum(self) -> Dict[str, np.ndarray]:
        """Read a spectrum file into arrays xi, a, b, r and h_err."""
        rows = self._read_rows(SPECTRUM_HEADER)
        values = np.array([[float(x) for x in row] for row in rows], dtype=np.float64).reshape(-1, 8)
        return {
            "xi": values[:, 0],
            "a": values[:, 1] + 1j * values[:, 2],
            "b": values[:, 3] + 1j * values[:, 4],
            "r": values[:, 5] + 1j * values[:, 6],
            "h_err": values[:, 7],
        }


def _write_csv(path: str, header: Sequence[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as file:
        writer = csv.writer(file, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    logger.info(f"Wrote {path}")


def write_signal(s: Signal, path: str) -> None:
    """Write a signal as `t,q_re,q_im` rows."""
    rows = ((format_float(t), format_float(q.real), format_float(q.imag))
            for t, q in zip(s.times, s.samples))
    _write_csv(path, SIGNAL_HEADER, rows)


def write_spectrum(res: ScatteringResult, path: str) -> None:
    """Write per-point a, b, r and the invariant error."""
    rows = (
        [format_float(np.real(x)),
         format_float(a.real), format_float(a.imag),
         format_float(b.real), format_float(b.imag),
         format_float(r.real), format_float(r.imag),
         format_float(h)]
        for x, a, b, r, h in zip(res.xi, res.a, res.b, res.r, res.h_err)
    )
    _write_csv(path, SPECTRUM_HEADER, rows)


def build_summary(res: ScatteringResult, energy: ContinuousEnergy,
                  ec_exact: Optional[float] = None, error: Optional[float] = None) -> Dict[str, Any]:
    """Collect the run metadata written next to a spectrum file."""
    summary = {
        "format_version": FORMAT_VERSION,
        "scheme": res.scheme,
        "M": res.M,
        "N": res.n_xi,
        "sigma": res.sigma,
        "ec": energy.value,
        "ec_flagged": energy.flagged,
        "max_h_err": float(np.max(res.h_err)),
        "a_zero_count": int(np.sum(res.a_zero)),
        "wall_time": res.wall_time,
    }
    if ec_exact is not None:
        summary["ec_exact"] = ec_exact
    if error is not None:
        summary["error_ec"] = error
    summary.update(res.metadata)
    return summary


def write_invariant_table(xi: np.ndarray, h_err: Mapping[str, np.ndarray], path: str) -> None:
    """Write the invariant error of every scheme side by side."""
    columns = [h_err[name[len("h_err_"):]] for name in INVARIANT_HEADER[1:]]
    rows = ([format_float(x)] + [format_float(col[j]) for col in columns] for j, x in enumerate(xi))
    _write_csv(path, INVARIANT_HEADER, rows)


def write_convergence(report: ConvergenceReport, csv_path: str, json_path: Optional[str] = None) -> None:
    """Write a convergence report as CSV rows and, optionally, a JSON document with slopes."""
    rows = (
        [row.scheme, str(row.M)] + [format_float(getattr(row, name)) for name in CONVERGENCE_HEADER[2:]]
        for row in report.rows
    )
    _write_csv(csv_path, CONVERGENCE_HEADER, rows)

    if json_path is None:
        return
    slopes = {}
    for scheme in report.schemes:
        slopes[scheme] = {
            metric: {
                "successive": report.slopes(scheme, metric),
                "fitted": report.fitted_slope(scheme, metric),
            }
            for metric in ("rmse_a", "rmse_b", "rmse_r")
        }
    document = {
        "format_version": FORMAT_VERSION,
        "reference": report.reference,
        "sigma": report.sigma,
        "reference_converged": report.reference_converged,
        "rows": [vars(row) for row in report.rows],
        "slopes": slopes,
    }
    write_json(document, json_path)


def write_bench(rows: Sequence[Mapping[str, Any]], path: str) -> None:
    """Write a timing table with one row per (scheme, M)."""
    formatted = (
        [row["scheme"], str(row["M"]), str(row["N"]), str(row["sigma"]),
         format_float(row["median_time"]), str(row["repeats"])]
        for row in rows
    )
    _write_csv(path, BENCH_HEADER, formatted)
