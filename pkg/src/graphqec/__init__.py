"""Qudit graph codes: finite-field kernel, code construction, channels,
one-way measurement programs and quantum-memory simulation."""

__version__ = "0.1.0"

from .ffield import FMat, FScalar, FVec, FieldError, SingularMatrixError
from .graph import CodingGraph, check_admissible, check_t_error_correcting, search_graph
from .phase import PhaseVec, chi, epsilon, phase_ball, tau
from .scheme import ErrorScheme, build_scheme

__all__ = [
    "__version__",
    "FMat",
    "FScalar",
    "FVec",
    "FieldError",
    "SingularMatrixError",
    "CodingGraph",
    "check_admissible",
    "check_t_error_correcting",
    "search_graph",
    "PhaseVec",
    "chi",
    "epsilon",
    "phase_ball",
    "tau",
    "ErrorScheme",
    "build_scheme",
]
