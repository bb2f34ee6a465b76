from ..targets import InteriorPoint, PrimeEnd, SideArc, TargetSpec
from .gridfield import (HarmonicField, discrete_harmonic_g, green_function,
                        harmonic_measure, hitting_probability, solve_dirichlet)
from .annulus import ImageFrame, SpectralField, solve_image_field
from .drift import (DerivativeBundle, compute_X, default_t_start,
                    derivative_bundle, envelope_e, fit_drift_constant,
                    frame_from_state, frames_along_state)

__all__ = [
    "InteriorPoint", "PrimeEnd", "SideArc", "TargetSpec",
    "HarmonicField", "solve_dirichlet", "green_function", "harmonic_measure",
    "hitting_probability", "discrete_harmonic_g",
    "ImageFrame", "SpectralField", "solve_image_field",
    "DerivativeBundle", "compute_X", "derivative_bundle", "envelope_e",
    "frame_from_state", "frames_along_state", "fit_drift_constant",
    "default_t_start",
]
