"""Simulation and Monte Carlo verification toolkit for alpha-homogeneous
random fields on lattices."""

from homfields.core import (
    ContractError,
    FieldSample,
    FunctionalSpec,
    HomogeneousNorm,
    NumericalError,
    ParetoAlpha,
    UsageError,
)
from homfields.lattice import Lattice, Window, enumerate_window, make_lattice, refine
from homfields.mc import ComparisonReport, MCEstimate, compare, run_mc

__version__ = "0.1.0"

__all__ = [
    "ComparisonReport",
    "ContractError",
    "FieldSample",
    "FunctionalSpec",
    "HomogeneousNorm",
    "Lattice",
    "MCEstimate",
    "NumericalError",
    "ParetoAlpha",
    "UsageError",
    "Window",
    "compare",
    "enumerate_window",
    "make_lattice",
    "refine",
    "run_mc",
]
