from .driving import CurveTrace, DrivingPath, Swallowed
from .state import WholePlaneState
from .ode import (
    C_HULL,
    evolve_covering_radial,
    evolve_covering_whole_plane,
    evolve_radial,
    evolve_whole_plane,
)
from .capacity import dcap_quotient, disk_hull_dcap, hull_distance_upper, hull_radius_capacity
from .codec import curve_to_driving, driving_to_curve

__all__ = [
    "CurveTrace",
    "DrivingPath",
    "Swallowed",
    "WholePlaneState",
    "C_HULL",
    "evolve_radial",
    "evolve_covering_radial",
    "evolve_whole_plane",
    "evolve_covering_whole_plane",
    "dcap_quotient",
    "disk_hull_dcap",
    "hull_distance_upper",
    "hull_radius_capacity",
    "curve_to_driving",
    "driving_to_curve",
]
