"""Periodic rays, their Dirichlet series and non-entirety diagnostics for
planar billiards in the exterior of disjoint disks."""

from .analysis import AnalysisReport, analysis_report, estimate_h
from .database import OrbitDatabase, OrbitRecord, build_database
from .errors import BilliardZetaError
from .geometry import Configuration, Disk, equilateral, validate_non_eclipse
from .linearization import Monodromy, fit_det_bounds, poincare_map
from .orbits import PeriodicOrbit, locate_orbit
from .spectrum import Spectrum, build_spectrum
from .symbolic import Word, enumerate_words

__version__ = "0.1.0"

__all__ = [
    "AnalysisReport", "BilliardZetaError", "Configuration", "Disk", "Monodromy", "OrbitDatabase", "OrbitRecord",
    "PeriodicOrbit", "Spectrum", "Word", "build_database", "analysis_report", "build_spectrum",
    "enumerate_words", "equilateral", "estimate_h", "fit_det_bounds", "locate_orbit", "poincare_map", "validate_non_eclipse",
]
