#!/usr/bin/env python3
"""
Smoke check: the fast tree-product path against step-by-step TES4SB.
"""

import logging
import sys

import numpy as np

from spectrum_extractor.fastpoly import EvalGrid
from spectrum_extractor.reference import ChirpedSechSpec, chirped_sech_signal
from spectrum_extractor.scattering import Scheme, run_conventional, run_fast

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s"
)
logger = logging.getLogger(__name__)


def main():
    """Compare FTES4SB and TES4SB on the chirped secant for both signs of sigma."""
    try:
        grid = EvalGrid.linspace(-20.0, 20.0, 1025)
        worst = 0.0
        for sigma in (1, -1):
            s = chirped_sech_signal(ChirpedSechSpec(A=5.2, C=4.0, L=30.0, M=4096), sigma)
            fast = run_fast(s, grid)
            slow = run_conventional(s, grid, Scheme.TES4SB)

            scale = np.maximum(np.abs(slow.b), 1.0)
            deviation = float(np.max(np.abs(fast.b - slow.b) / scale))
            worst = max(worst, deviation)
            logger.info(f"sigma={sigma}: fast {fast.wall_time:.2f} s, conventional {slow.wall_time:.2f} s")
            logger.info(f"  max scaled deviation in b: {deviation:.3e}")
            logger.info(f"  max h_err fast {np.max(fast.h_err):.3e}, conventional {np.max(slow.h_err):.3e}")

        if worst > 1e-6:
            logger.error(f"Fast path deviates by {worst:.3e}")
            return 1
        return 0
    except Exception as e:
        logger.error(f"Error: {str(e)}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
