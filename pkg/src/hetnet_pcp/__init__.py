"""Coverage of heterogeneous cellular networks with Poisson and Poisson-cluster
base-station tiers: analytic evaluation by PGFL / sum-product quadrature and a
Monte Carlo simulator that cross-checks it."""

__version__ = "0.1.0"

from .coverage import CoverageEstimate, baseline_closed_form, total_coverage
from .geometry import (
    PCP, PPP, Matern, NetworkModel, Thomas, TierSpec, UserPlacement,
)
from .montecarlo import SimulationConfig, simulate_coverage
from .scenario import section_v_model

__all__ = [
    "CoverageEstimate", "baseline_closed_form", "total_coverage",
    "PCP", "PPP", "Matern", "NetworkModel", "Thomas", "TierSpec", "UserPlacement",
    "SimulationConfig", "simulate_coverage", "section_v_model",
]
