"""
Module for run configuration and its validation.
"""

import argparse
import logging
import os
from dataclasses import dataclass
from typing import List, Optional

from spectrum_extractor.fastpoly import EvalGrid
from spectrum_extractor.scattering import Scheme

logger = logging.getLogger(__name__)

THREADS_ENV_VAR = "SPECTRUM_EXTRACTOR_THREADS"

SCHEME_DESCRIPTIONS = {
    Scheme.BO: "Second-order exponential midpoint (Boffetta-Osborne)",
    Scheme.TES4: "Fourth-order three-exponential conservative scheme",
    Scheme.TES4SB: "TES4 with the central exponential split into 11 factors",
    Scheme.FTES4SB: "TES4SB assembled as one polynomial by a fast tree product",
}

DEFAULT_M_LIST = "1024,2048,4096,8192,16384"


def parse_scheme(name: str) -> Scheme:
    """
    Parse one scheme name.

    Raises:
        ValueError: If the name is unknown
    """
    try:
        return Scheme(name.strip().lower())
    except ValueError:
        valid = ", ".join(s.value for s in Scheme)
        raise ValueError(f"Invalid scheme: {name}. Available schemes: {valid}")


def parse_schemes(schemes: str) -> List[Scheme]:
    """Parse a comma-separated list of scheme names (e.g. 'bo,tes4')."""
    names = [s for s in schemes.split(",") if s.strip()]
    if not names:
        raise ValueError("No schemes given")
    return [parse_scheme(s) for s in names]


def parse_m_list(values: str) -> List[int]:
    """
    Parse a comma-separated list of resolutions (e.g. '1024,2048,4096').

    Raises:
        ValueError: If an entry is not an integer >= 2 or the list is not increasing
    """
    try:
        m_list = [int(m.strip()) for m in values.split(",") if m.strip()]
    except ValueError as e:
        raise ValueError(f"Invalid M list format. Expected comma-separated integers. Error: {str(e)}")
    if not m_list:
        raise ValueError("No M values given")
    if any(m < 2 for m in m_list):
        raise ValueError(f"Every M must be >= 2, got {m_list}")
    if any(b <= a for a, b in zip(m_list, m_list[1:])):
        raise ValueError(f"M values must be strictly increasing, got {m_list}")
    return m_list


def resolve_threads(threads: Optional[int] = None) -> int:
    """Thread count from the argument, else the environment, else 1."""
    if threads is None:
        raw = os.environ.get(THREADS_ENV_VAR)
        if raw is None or not raw.strip():
            return 1
        try:
            threads = int(raw)
        except ValueError:
            raise ValueError(f"{THREADS_ENV_VAR} must be an integer, got '{raw}'")
    if threads < 1:
        raise ValueError(f"Thread count must be >= 1, got {threads}")
    return threads


@dataclass
class RunConfig:
    """Settings shared by the compute, convergence, bench and invariant commands."""

    sigma: int = 1
    scheme: Scheme = Scheme.TES4SB
    xi_min: float = -20.0
    xi_max: float = 20.0
    n_xi: int = 1025
    M: int = 4096
    L: float = 30.0
    A: float = 5.2
    C: float = 4.0
    repeats: int = 3
    threads: int = 1
    input_path: Optional[str] = None
    output_path: Optional[str] = None

    def validate(self) -> "RunConfig":
        """
        Check the configuration.

        Raises:
            ValueError: On the first invalid setting
        """
        if self.sigma not in (1, -1):
            raise ValueError(f"sigma must be +1 or -1, got {self.sigma}")
        if self.n_xi < 1:
            raise ValueError(f"Number of spectral points must be >= 1, got {self.n_xi}")
        if not self.xi_min < self.xi_max:
            raise ValueError(f"Expected xi_min < xi_max, got {self.xi_min} and {self.xi_max}")
        if self.M < 2:
            raise ValueError(f"M must be >= 2, got {self.M}")
        if not self.L > 0:
            raise ValueError(f"L must be positive, got {self.L}")
        if self.repeats < 1:
            raise ValueError(f"repeats must be >= 1, got {self.repeats}")
        if self.threads < 1:
            raise ValueError(f"Thread count must be >= 1, got {self.threads}")
        self.scheme = Scheme(self.scheme)
        return self

    def grid(self) -> EvalGrid:
        return EvalGrid.linspace(self.xi_min, self.xi_max, self.n_xi)

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        """Build and validate a config from parsed command-line arguments."""
        defaults = cls()
        config = cls(
            sigma=getattr(args, "sigma", defaults.sigma),
            scheme=parse_scheme(getattr(args, "scheme", defaults.scheme.value)),
            xi_min=getattr(args, "xi_min", defaults.xi_min),
            xi_max=getattr(args, "xi_max", defaults.xi_max),
            n_xi=getattr(args, "n_xi", defaults.n_xi),
            M=getattr(args, "M", defaults.M),
            L=getattr(args, "L", defaults.L),
            A=getattr(args, "A", defaults.A),
            C=getattr(args, "C", defaults.C),
            repeats=getattr(args, "repeats", defaults.repeats),
            threads=resolve_threads(getattr(args, "threads", None)),
            input_path=getattr(args, "input", None),
            output_path=getattr(args, "out", None),
        )
        return config.validate()


def format_scheme_list(schemes: List[Scheme]) -> str:
    """Format schemes for display, one per line with a description."""
    return "\n".join(f"{s.value}: {SCHEME_DESCRIPTIONS[s]}" for s in schemes)
