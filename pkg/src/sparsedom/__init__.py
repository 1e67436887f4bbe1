"""Dyadic sparse-domination toolkit.

Shifted dyadic cube systems on a finite grid, bilinear singular-integral
truncations, multilinear weight characteristics, sparse operators with
their domination recursion, and a numerical harness that verifies the
weighted inequalities tying them together.
"""

__version__ = "0.1.0"

from .calibration import CalibrationConstants
from .dyadic import DyadicCube, GridGeometry
from .gridfn import GridFunction, Weight
from .report import VerificationReport
from .sparse import DominationResult, SparseFamily
from .weights import ConstantsReport, ExponentTuple

__all__ = [
    "CalibrationConstants", "ConstantsReport", "DominationResult",
    "DyadicCube", "ExponentTuple", "GridFunction", "GridGeometry",
    "SparseFamily", "VerificationReport", "Weight",
]
