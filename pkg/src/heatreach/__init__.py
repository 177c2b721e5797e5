"""Reachable states of the heat equation: layer potentials, control synthesis
on balls and numerical checks of analytic continuation."""

__version__ = "0.1.0"

from .errors import NumericalGuardError
from .geometry import (Ball, ComplexPoint, Interval, Polygon, distance_to_boundary,
                       egg_contains, sample_compact_subset)
from .special_functions import (exp_integral_e1, heat_kernel, heat_kernel_c,
                                lorentzian_target, singular_family_params,
                                singular_family_value)

__all__ = [
    "__version__",
    "NumericalGuardError",
    "Ball",
    "ComplexPoint",
    "Interval",
    "Polygon",
    "distance_to_boundary",
    "egg_contains",
    "sample_compact_subset",
    "exp_integral_e1",
    "heat_kernel",
    "heat_kernel_c",
    "lorentzian_target",
    "singular_family_params",
    "singular_family_value",
]
