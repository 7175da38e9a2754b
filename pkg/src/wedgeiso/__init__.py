"""Weighted isoperimetric profiles in orthants: quadrature, rearrangement maps and numerical checks."""
from .errors import DomainError, NonConvergence
from .profile import IsoperimetricProfile, profile_power_case, profile_value, quarter_ball_radius
from .sigma_map import SigmaMap, build_sigma, certify_derivative_bound, sigma_eval, sigma_inverse, sigma_prime
from .symmetrization3d import ReducedSetK, SliceSet3D, check_step2, symmetrize
from .verification import ShapeFamily, optimize_shape, profile_scan, random_sweep
from .wedge_geometry import (
    HalfPlaneWeight,
    PolarCurve,
    RadialShape,
    WedgeWeight,
    check_contraction,
    check_measure_preservation,
    measure2d,
    perimeter2d,
    transport,
)

__version__ = "0.1.0"
