"""Mean curvature flow of isoparametric submanifolds through their Weyl chamber.

The flow of a whole isoparametric family reduces to an ODE for one point of
the chamber. This package provides the root-sum curvature oracle, an
adaptive integrator for the chamber ODE, rank-2 closed forms, estimate
audits and a small catalog of examples.
"""
__version__ = "0.1.0"

from .curvature import (CurvatureReport, curvature_report, mean_curvature_euclidean,
                        mean_curvature_spherical, shape_norm_sq_euclidean,
                        shape_norm_sq_spherical, traceless_norm_sq)
from .flow_ode import (FlowSpec, IntegrationError, MinimalPointError, NoCollapse, collapse_time,
                       euclidean_from_spherical, find_minimal_point, integrate,
                       pair_distance_audit)
from .kernels import BACKEND
from .rank2 import DomainError, Rank2Config, closed_form_trajectory, collapse_times
from .root_system import (ChamberError, ChamberPoint, RootSystemData, ValidationError,
                          dihedral_roots, in_chamber, validate)
from .trajectory import FlowTrajectory, Termination

__all__ = [
    "__version__", "BACKEND", "ChamberError", "ChamberPoint", "CurvatureReport", "DomainError",
    "FlowSpec", "FlowTrajectory", "IntegrationError", "MinimalPointError", "NoCollapse",
    "Rank2Config", "RootSystemData", "Termination", "ValidationError", "closed_form_trajectory",
    "collapse_time", "collapse_times", "curvature_report", "dihedral_roots",
    "euclidean_from_spherical", "find_minimal_point", "in_chamber", "integrate",
    "mean_curvature_euclidean", "mean_curvature_spherical", "pair_distance_audit",
    "shape_norm_sq_euclidean", "shape_norm_sq_spherical", "traceless_norm_sq", "validate",
]
