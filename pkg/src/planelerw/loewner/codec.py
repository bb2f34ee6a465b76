"""Curve <-> driving-function codecs under capacity parameterization.

``curve_to_driving`` is an incremental conformal welding ("zipper"): each
curve increment is mapped through the current map stack and consumed by an
elementary radial slit map whose root angle gives ``e**(i xi)``.
``driving_to_curve`` tracks the tip by reverse-flow integration from the
unit circle with a small offset and Richardson extrapolation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import elementary as em
from .driving import CurveTrace, DrivingPath
from .state import WholePlaneState
from ..errors import NonIncreasingCapacity, SelfIntersection, TipDiverged

__all__ = ["weld_zipper", "WeldResult", "curve_to_driving", "driving_to_curve"]

_SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class WeldResult:
    """Output of a zipper run.

    ``v`` is the capacity at each consumed input sample, ``xi`` the driving
    function sampled at every elementary-map capacity, ``state`` the final
    composed map stack (whole-plane branch only), ``first_index`` the index
    of the first input sample outside the base hull, ``v0`` the base
    capacity at which welding started.
    """

    v: np.ndarray
    xi: DrivingPath
    state: WholePlaneState | None
    first_index: int
    v0: float


def _lift(angle, prev):
    return prev + np.mod(angle - prev + np.pi, 2.0 * np.pi) - np.pi


def weld_zipper(points, branch="ext", cap_step=1e-3, base_capacity=None,
                max_sub=200000):
    """Weld sampled curve points into elementary slit maps.

    branch "ext": whole-plane curve from 0; images live outside the unit
    circle after the initial scaling by e**(-b) with base capacity b
    (the hull below b is the closed disk of radius e**b).
    branch "disk": boundary hull attached to the unit circle from inside
    the disk; no initial scaling and capacities start at 0.
    """
    pts = np.asarray(points, dtype=complex).ravel()
    if pts.size == 0:
        raise ValueError("no curve points")
    ext = branch == "ext"
    if ext:
        if base_capacity is None:
            base_capacity = float(np.log(np.abs(pts[-1]) / 4.0)) if pts.size == 1 \
                else float(np.log(max(np.abs(pts[0]), 1e-300) / 4.0))
        v0 = base_capacity
        w = pts * np.exp(-v0)
    else:
        v0 = 0.0
        w = pts.copy()

    def excess(u):
        # capacity of the slit reaching u, as a function of |u|
        s = np.abs(u) if ext else 1.0 / np.abs(u)
        return em.slit_cap_from_radius(np.maximum(s, 1.0 + 1e-300))

    fwd = em.slit_map_ext if ext else em.slit_map_disk

    angles, caps = [], []
    v_samples = np.full(pts.size, np.nan)
    vcum = v0
    lifted = None
    first_index = None
    inside = (np.abs(w) <= 1.0 + 1e-12) if ext else (np.abs(w) >= 1.0 - 1e-12)
    i0 = 0
    while i0 < pts.size and inside[i0]:
        i0 += 1
    if i0 == pts.size:
        raise NonIncreasingCapacity("every sample lies inside the base hull")
    first_index = i0
    w = w[i0:]
    nsub = 0
    for i in range(w.size):
        target = w[0]
        d = float(excess(np.atleast_1d(target))[0])
        if not np.isfinite(d) or d <= 1e-15:
            raise NonIncreasingCapacity(
                f"sample {i0 + i} adds no capacity (|image|-1 = {abs(target)-1:.2e})")
        while True:
            nsub += 1
            if nsub > max_sub:
                raise SelfIntersection("welding did not converge (subdivision limit)")
            d = float(excess(np.atleast_1d(w[0]))[0])
            if not np.isfinite(d):
                raise SelfIntersection(f"sample {i0 + i} maps inside the current hull")
            if d <= cap_step:
                c = float(np.angle(w[0]))
                dc = max(d, 1e-15)
                last = True
            else:
                # intermediate point on the segment from the circle to the
                # image, chosen so the sub-slit capacity is ~ cap_step
                anchor = w[0] / np.abs(w[0])
                frac = np.sqrt(cap_step / d)
                u = anchor + frac * (w[0] - anchor)
                c = float(np.angle(u))
                dc = float(excess(np.atleast_1d(u))[0])
                last = False
            angles.append(c)
            caps.append(dc)
            vcum += dc
            if last:
                w = fwd(w[1:], c, dc)
                break
            w = fwd(w, c, dc)
        v_samples[i0 + i] = vcum
        lifted = c if lifted is None else lifted
    angles = np.asarray(angles)
    caps = np.asarray(caps)
    # continuous 2-pi lift of the root angles
    lift = np.empty_like(angles)
    prev = angles[0]
    for j, a in enumerate(angles):
        prev = _lift(a, prev)
        lift[j] = prev
    times = v0 + np.cumsum(caps)
    xi = DrivingPath(times, lift, anchor=float(lift[0]))
    state = WholePlaneState(v0, angles, caps) if ext else None
    return WeldResult(v_samples, xi, state, first_index, v0)


def curve_to_driving(trace: CurveTrace, cap_step: float = 1e-3,
                     base_capacity: float | None = None):
    """Extract the capacity reparameterization and driving function.

    Returns ``(v, xi)`` where ``v[i] = ccap(beta([t_0, t_i]))`` for every
    trace sample outside the base hull (NaN inside it) and ``xi`` is the
    continuous real lift of the driving function on the capacity grid.
    The composed map stack is available as the third field of the result.
    """
    res = weld_zipper(trace.points, branch="ext", cap_step=cap_step,
                      base_capacity=base_capacity)
    if np.any(np.diff(res.v[np.isfinite(res.v)]) <= 0):
        raise NonIncreasingCapacity("capacity sequence is not strictly increasing")
    return res


def _wp_rhs(xi, t, w):
    e = np.exp(1j * xi(t))
    return w * (e + w) / (e - w)


def _rk4_back(xi, t, w, h):
    """One RK4 step of the whole-plane ODE from t to t - h (h may be a vector)."""
    k1 = _wp_rhs(xi, t, w)
    k2 = _wp_rhs(xi, t - 0.5 * h, w - 0.5 * h * k1)
    k3 = _wp_rhs(xi, t - 0.5 * h, w - 0.5 * h * k2)
    k4 = _wp_rhs(xi, t - h, w - h * k3)
    return w - (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _march(xi, w, t_from, t_to):
    """Node-by-node backward march of smooth (off-circle) points."""
    if w.size == 0 or t_to >= t_from - 1e-15:
        return w
    grid = xi.times
    nodes = grid[(grid < t_from - 1e-15) & (grid > t_to + 1e-15)]
    t = t_from
    for t_next in np.concatenate([nodes[::-1], [t_to]]):
        w = _rk4_back(xi, t, w, t - t_next)
        t = t_next
    return w


def driving_to_curve(xi: DrivingPath, times=None, eps_tip: float = 1e-3,
                     tip_tol: float = 1e-3, escape: float = 0.05) -> CurveTrace:
    """Trace the curve generated by a whole-plane driving function.

    ``beta(t)`` is the preimage of ``e**(i xi(t))`` under ``phi_t``,
    evaluated by reverse-flow integration started at offsets ``eps_tip``,
    ``eps_tip/2`` and ``eps_tip/4`` from the circle.  The square-root-type
    Richardson extrapolations of the two finer pairs must agree within
    ``tip_tol`` times the hull scale ``4 e**t`` or TipDiverged is raised.
    """
    if times is None:
        times = xi.times
    times = np.asarray(np.atleast_1d(times), dtype=float)
    n = times.size
    offs = np.array([eps_tip, eps_tip / 2.0, eps_tip / 4.0])
    roots = np.exp(1j * xi(times))
    w = roots[:, None] * (1.0 + offs[None, :])

    # phase 1: per-tip backward burn-in, batched with individual clocks,
    # until every offset point escapes to distance > `escape` from the circle
    t_clock = np.repeat(times, 3)
    w_flat = w.ravel()
    t_lo = xi.t_start
    for _ in range(100000):
        d = np.abs(w_flat) - 1.0
        run = (d <= escape) & (t_clock > t_lo + 1e-15)
        if not run.any():
            break
        h = np.where(run, np.minimum(np.maximum(0.02 * d * d, 1e-12),
                                     t_clock - t_lo), 0.0)
        w_flat = _rk4_back(xi, t_clock, w_flat, h)
        t_clock = t_clock - h
    else:
        raise TipDiverged("burn-in failed to escape the circle")

    # phase 2: common sweep over the sampling grid, activating points in
    # decreasing exit-time order
    order = np.argsort(t_clock)[::-1]
    active = np.empty(0, dtype=complex)
    slots = np.empty(0, dtype=int)
    t_cur = float(t_clock[order[0]]) if n else t_lo
    for k in order:
        active = _march(xi, active, t_cur, float(t_clock[k]))
        t_cur = float(t_clock[k])
        active = np.append(active, w_flat[k])
        slots = np.append(slots, k)
    active = _march(xi, active, t_cur, t_lo)
    phys = np.empty(3 * n, dtype=complex)
    phys[slots] = active * np.exp(xi.t_start)
    f1, f2, f4 = phys[0::3], phys[1::3], phys[2::3]
    # f(eps) = beta + a sqrt(eps) + O(eps)
    x12 = f2 + (f2 - f1) / (_SQRT2 - 1.0)
    x24 = f4 + (f4 - f2) / (_SQRT2 - 1.0)
    disagreement = np.abs(x12 - x24)
    hull_scale = 4.0 * np.exp(times) + 4.0 * np.exp(xi.t_start)
    if np.any(disagreement > tip_tol * hull_scale):
        worst = float(np.max(disagreement / hull_scale))
        raise TipDiverged(f"tip extrapolations disagree by {worst:.2e} x scale")
    return CurveTrace(times, x24)
