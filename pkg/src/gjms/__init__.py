"""Numerical verification toolkit for GJMS operators on odd-dimensional spheres."""

from gjms.constants import (
    ProblemParams,
    c_alpha,
    expand_gjms_polynomial,
    gamma_ratio,
    gjms_eigenvalue,
    q_curvature,
    sharp_constant,
    sphere_surface_area,
)

__version__ = "0.1.0"

__all__ = [
    "ProblemParams",
    "c_alpha",
    "expand_gjms_polynomial",
    "gamma_ratio",
    "gjms_eigenvalue",
    "q_curvature",
    "sharp_constant",
    "sphere_surface_area",
    "__version__",
]
