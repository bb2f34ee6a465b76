"""Direct ODE integration of the radial and whole-plane Loewner equations.

These evolvers advance finitely many points under a sampled driving
function with classical RK4 stepping, step-doubling error control, and
geometric step shrinkage near the driving singularity.  They are the
reference route for map evaluation; the composed elementary-map stack in
:mod:`.state` is the fast route, and the two are cross-checked in tests.
"""

from __future__ import annotations

import numpy as np

from .driving import DrivingPath, Swallowed
from ..errors import StepTooLarge, TruncationTooLate

__all__ = [
    "evolve_radial",
    "evolve_covering_radial",
    "evolve_whole_plane",
    "evolve_covering_whole_plane",
    "C_HULL",
]

# Conservative stand-in for the absolute constant bounding |phi_H^{-1}(z)-z|
# on hulls of unit radius; only the direction of guard inequalities matters.
C_HULL = 3.0

_DT_FLOOR = 1e-13
_ERR_TOL = 1e-10


def _rhs_disk(w, e):
    return w * (e + w) / (e - w)


def _rhs_cov(w, xi_t):
    return 1.0 / np.tan(0.5 * (w - xi_t))


def _integrate(points, xi, dt_max, swallowed_tolerance, covering, clamp):
    """Shared batched RK4 driver.  ``clamp`` flags blow-through detection."""
    t, t_end = xi.t_start, xi.t_end
    w = np.array(points, dtype=complex).ravel().copy()
    n = w.size
    alive = np.ones(n, dtype=bool)
    sw_time = np.full(n, np.nan)

    def rhs(t_, w_):
        if covering:
            return _rhs_cov(w_, xi(t_))
        return _rhs_disk(w_, np.exp(1j * xi(t_)))

    def sing_dist(t_, w_):
        if covering:
            return 2.0 * np.abs(np.sin(0.5 * (w_ - xi(t_))))
        return np.abs(w_ - np.exp(1j * xi(t_)))

    def rk4(t_, w_, h):
        k1 = rhs(t_, w_)
        k2 = rhs(t_ + 0.5 * h, w_ + 0.5 * h * k1)
        k3 = rhs(t_ + 0.5 * h, w_ + 0.5 * h * k2)
        k4 = rhs(t_ + h, w_ + h * k3)
        return w_ + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)

    # immediate swallow check
    d0 = sing_dist(t, w)
    hit = alive & (d0 < swallowed_tolerance)
    sw_time[hit] = t
    alive &= ~hit

    while t < t_end - 1e-15 and alive.any():
        d = sing_dist(t, w[alive])
        dt = min(dt_max, t_end - t, max(0.05 * float(np.min(d)) ** 2, _DT_FLOOR))
        while True:
            full = rk4(t, w[alive], dt)
            half = rk4(t + 0.5 * dt, rk4(t, w[alive], 0.5 * dt), 0.5 * dt)
            err = np.max(np.abs(full - half) / (1.0 + np.abs(half)))
            if np.isfinite(err) and err <= _ERR_TOL:
                break
            if dt <= _DT_FLOOR:
                raise StepTooLarge(
                    f"local error {err:.3e} exceeds tolerance at the step floor")
            dt *= 0.5
        # local extrapolation of the doubled step
        w[alive] = half + (half - full) / 15.0
        t += dt
        d = sing_dist(t, w[alive])
        bad = d < swallowed_tolerance
        if clamp and not covering:
            bad |= ~np.isfinite(w[alive])
        if bad.any():
            idx = np.flatnonzero(alive)[bad]
            sw_time[idx] = t
            alive[idx] = False
    return w, sw_time


def _package(w, sw_time):
    out = []
    for wi, ti in zip(w, sw_time):
        out.append(Swallowed(float(ti)) if np.isfinite(ti) else complex(wi))
    return out


def evolve_radial(xi: DrivingPath, points, dt_max: float,
                  swallowed_tolerance: float = 1e-6):
    """Radial Loewner flow of points of the closed unit disk.

    Returns ``psi_T(z)`` for each point, or :class:`Swallowed` with the
    time at which the point came within ``swallowed_tolerance`` of the
    driving singularity ``e**(i xi(t))``.
    """
    pts = np.atleast_1d(np.asarray(points, dtype=complex))
    if np.any(np.abs(pts) > 1.0 + 1e-12):
        raise ValueError("radial evolution expects points in the closed unit disk")
    w, sw = _integrate(pts, xi, dt_max, swallowed_tolerance, covering=False, clamp=True)
    return _package(w, sw)


def evolve_covering_radial(xi: DrivingPath, points, dt_max: float,
                           swallowed_tolerance: float = 1e-6):
    """Covering radial flow d/dt psi = cot((psi - xi)/2) on the upper half-plane."""
    pts = np.atleast_1d(np.asarray(points, dtype=complex))
    if np.any(pts.imag < -1e-12):
        raise ValueError("covering radial evolution expects Im z >= 0")
    w, sw = _integrate(pts, xi, dt_max, swallowed_tolerance, covering=True, clamp=False)
    return _package(w, sw)


def evolve_whole_plane(xi: DrivingPath, points, dt_max: float,
                       swallowed_tolerance: float = 1e-6):
    """Whole-plane flow phi_t with disk initialization at ``xi.t_start``.

    ``phi_{t_start}(z) := e**(-t_start) z``; the truncation guard
    ``(1 + C_HULL) e**t_start < min|z| / 2`` must hold for every requested
    point, otherwise :class:`TruncationTooLate` is raised.
    """
    pts = np.atleast_1d(np.asarray(points, dtype=complex))
    min_abs = float(np.min(np.abs(pts)))
    if (1.0 + C_HULL) * np.exp(xi.t_start) >= 0.5 * min_abs:
        raise TruncationTooLate(
            f"t_start={xi.t_start} too late for a point at distance {min_abs}")
    init = pts * np.exp(-xi.t_start)
    w, sw = _integrate(init, xi, dt_max, swallowed_tolerance, covering=False, clamp=True)
    return _package(w, sw)


def evolve_covering_whole_plane(xi: DrivingPath, points, dt_max: float,
                                swallowed_tolerance: float = 1e-6):
    """Covering whole-plane flow with initialization ``z - i t_start``.

    The initialization error is below ``4 (1 + C_HULL) e**t |e**(iz)|``
    provided ``(1 + C_HULL) e**t |e**(iz)| <= 1/2``, which is enforced as
    a precondition guard.
    """
    pts = np.atleast_1d(np.asarray(points, dtype=complex))
    guard = (1.0 + C_HULL) * np.exp(xi.t_start) * np.abs(np.exp(1j * pts))
    if np.any(guard > 0.5):
        raise TruncationTooLate(
            "initialization bound exceeds 1/2; choose an earlier t_start")
    init = pts - 1j * xi.t_start
    w, sw = _integrate(init, xi, dt_max, swallowed_tolerance, covering=True, clamp=False)
    return _package(w, sw)
