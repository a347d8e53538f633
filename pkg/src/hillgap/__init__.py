"""Spectral gaps of Hill-Schrodinger operators with (possibly singular) periodic potentials."""

from hillgap.errors import HillGapError
from hillgap.potential import PeriodicPotential, PotentialFamily, from_coefficients, make_family
from hillgap.weights import SlowlyVaryingWeight, WeightFunction
from hillgap.galerkin import Parity, SpectralData, converged_spectrum
from hillgap.oracle import DiscriminantOracle, endpoint_roots
from hillgap.asymptotics import compute_omega, marchenko_ostrovskii_check, residual_report

__version__ = "0.1.0"

__all__ = [
    "HillGapError",
    "PeriodicPotential",
    "PotentialFamily",
    "from_coefficients",
    "make_family",
    "SlowlyVaryingWeight",
    "WeightFunction",
    "Parity",
    "SpectralData",
    "converged_spectrum",
    "DiscriminantOracle",
    "endpoint_roots",
    "compute_omega",
    "residual_report",
    "marchenko_ostrovskii_check",
]
