"""Whole-plane Loewner evolution and LERW from interior points.

A numerics library for simulating continuous loop-erased random walk
started from interior points of finitely connected planar domains via the
whole-plane Loewner equation, the matching discrete LERW on lattice
approximations, and a statistical harness checking the structural claims
relating the two (drift equation, local martingales, partition-function
martingale, driving-function convergence, reversibility).
"""

from . import loewner
from .errors import PlaneLerwError

__version__ = "0.1.0"
__all__ = ["loewner", "PlaneLerwError", "__version__"]
