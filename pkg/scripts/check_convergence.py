#!/usr/bin/env python3
"""
Smoke check: observed orders of all schemes on the chirped secant.
"""

import logging
import sys

from spectrum_extractor.fastpoly import EvalGrid
from spectrum_extractor.reference import ChirpedSechSpec, convergence_study
from spectrum_extractor.scattering import Scheme

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s"
)
logger = logging.getLogger(__name__)

EXPECTED_ORDER = {Scheme.BO: 2.0, Scheme.TES4: 4.0, Scheme.TES4SB: 4.0, Scheme.FTES4SB: 4.0}


def main():
    """Run the oracle-referenced convergence study and check the fitted slopes."""
    try:
        report = convergence_study(
            ChirpedSechSpec(A=5.2, C=4.0, L=30.0),
            EvalGrid.linspace(-20.0, 20.0, 1025),
            list(Scheme),
            [1024, 2048, 4096, 8192],
            reference="oracle",
        )

        failed = False
        for scheme, order in EXPECTED_ORDER.items():
            for metric in ("rmse_a", "rmse_b"):
                slope = report.fitted_slope(scheme, metric)
                logger.info(f"{scheme.value} {metric}: fitted order {slope}")
                if slope is None or abs(slope - order) > 0.5:
                    failed = True

        return 1 if failed else 0
    except Exception as e:
        logger.error(f"Error: {str(e)}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
