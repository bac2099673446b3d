"""Activator-depleted reaction-diffusion on a disk.

Closed-form Neumann eigenmodes of the polar Laplacian, linear stability of
the uniform steady state, partitioning curves and region maps in the
(alpha, beta) plane, disk triangulation and P1 finite-element time stepping.
"""

from diskturing.eigenmodes import (
    EigenField,
    ModeIndex,
    SpectralGrid,
    build_grid,
    eigenfunction_field,
    eigenvalue,
    neumann_pair_residual,
    radial_value,
    series_coefficients,
)
from diskturing.stability import (
    ReactionParams,
    StabilityClass,
    StabilityReport,
    classify_over_modes,
    classify_point,
    eigen_pair,
    radius_bound,
    repeated_root_value,
    stability_matrix,
    steady_state,
    trace_det,
)

__version__ = "0.1.0"

__all__ = [
    "EigenField",
    "ModeIndex",
    "ReactionParams",
    "SpectralGrid",
    "StabilityClass",
    "StabilityReport",
    "build_grid",
    "classify_over_modes",
    "classify_point",
    "eigen_pair",
    "eigenfunction_field",
    "eigenvalue",
    "neumann_pair_residual",
    "radial_value",
    "radius_bound",
    "repeated_root_value",
    "series_coefficients",
    "stability_matrix",
    "steady_state",
    "trace_det",
]
