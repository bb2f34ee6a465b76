"""Continuous interior LERW: driver sampling, the driving-function
integral equation (SDE and Picard modes), partition function, and the
Poisson-kernel martingale observable.

The evolution engine keeps an incremental image-side frame: reflected
boundary components, the reflected target seed, and reflected guard
sensors are pushed forward by one elementary slit map per time step, so
the drift refresh at a capacity cadence needs no backward map evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .domain import DomainSpec
from .errors import (GuardNotSurrounding, NoContraction, NonPositiveDy,
                     PointInHull, StripTooThin, TruncationTooLate)
from .harmonic.annulus import ImageFrame, solve_image_field
from .harmonic.drift import (DerivativeBundle, _arc_masks, _reflected_boundary,
                             _resample_closed, _target_seed, default_t_start,
                             envelope_e, fit_drift_constant)
from .loewner import elementary as em
from .loewner.driving import DrivingPath
from .loewner.state import WholePlaneState
from .targets import InteriorPoint, PrimeEnd, SideArc, TargetSpec

__all__ = ["DriverSample", "LerwRun", "PartitionTrajectory", "sample_driver",
           "solve_driving_sde", "solve_driving_picard", "partition_function",
           "poisson_observable", "poisson_observable_spectral"]

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class DriverSample:
    """Whole-plane SLE driver: x0 + sqrt(kappa) * two-sided Brownian path."""

    times: np.ndarray
    values: np.ndarray
    kappa: float
    seed: int | None

    @property
    def t_start(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def as_driving_path(self) -> DrivingPath:
        return DrivingPath(self.times, self.values, self.kappa,
                           anchor=float(self.values[0]))


def sample_driver(kappa: float, t_start: float, t_end: float, dt: float,
                  seed=None, x0: float | None = None) -> DriverSample:
    """Exact-in-distribution Gaussian driver on a uniform grid.

    The path is anchored at the grid point nearest 0 (value x0, uniform on
    [0, 2 pi) unless given); increments on either side are independent
    N(0, kappa dt), matching the two-sided definition.
    """
    if not t_start < t_end:
        raise ValueError("t_start must precede t_end")
    n = int(np.round((t_end - t_start) / dt))
    times = t_start + dt * np.arange(n + 1)
    rng = np.random.default_rng(seed)
    if x0 is None:
        x0 = float(rng.uniform(0.0, TWO_PI))
    k = int(np.clip(np.round(-t_start / dt), 0, n))
    t_anchor = times[k]
    anchor_val = x0
    if t_anchor != 0.0:
        anchor_val = x0 + np.sqrt(kappa * abs(t_anchor)) * rng.standard_normal()
    values = np.empty(n + 1)
    values[k] = anchor_val
    if k < n:
        inc = np.sqrt(kappa * dt) * rng.standard_normal(n - k)
        values[k + 1:] = anchor_val + np.cumsum(inc)
    if k > 0:
        inc = np.sqrt(kappa * dt) * rng.standard_normal(k)
        values[k - 1::-1] = anchor_val + np.cumsum(inc)
    return DriverSample(times, values, kappa, seed if isinstance(seed, int) else None)


class _Frame:
    """Incrementally advanced image-side geometry under psi_t.

    Boundary samples, guard sensors and the target seed live in one flat
    array so each time step costs a single elementary-map evaluation.
    """

    def __init__(self, domain: DomainSpec, target: TargetSpec, t0: float,
                 n_per_component: int = 96, guard=None, n_guard: int = 128):
        self.domain = domain
        self.target = target
        self.t = t0
        scale = np.exp(t0)
        if domain.is_sphere:
            comps, self.arc_masks = [], None
        else:
            comps = _reflected_boundary(domain, n_per_component)
            self.arc_masks = _arc_masks(domain, target, n_per_component) \
                if isinstance(target, SideArc) else None
        sizes = [c.size for c in comps]
        self.splits = np.cumsum(sizes)[:-1]
        self.n_bnd = int(sum(sizes))
        blocks = [np.concatenate(comps) if comps else np.empty(0, dtype=complex)]
        if guard is not None:
            g = _resample_closed(np.asarray(guard, dtype=complex), n_guard)
            blocks.append(1.0 / np.conj(g))
        self.n_guard = 0 if guard is None else n_guard
        seed = _target_seed(domain, target)
        self.has_pole = seed is not None
        if self.has_pole:
            blocks.append(np.array([seed]))
        self.pts = np.concatenate(blocks) * scale
        self.deriv = scale + 0j
        self.track_deriv = isinstance(target, PrimeEnd)

    def advance(self, angle: float, dcap: float):
        if self.track_deriv:
            self.deriv = self.deriv * em.slit_map_deriv_disk(
                self.pts[-1:], angle, dcap)[0]
        self.pts = em.slit_map_disk(self.pts, angle, dcap)
        self.t += dcap

    def snapshot(self) -> ImageFrame:
        bnd = self.pts[:self.n_bnd]
        blobs = list(np.split(bnd, self.splits)) if bnd.size else []
        pole = complex(self.pts[-1]) if self.has_pole else None
        t = self.target
        if isinstance(t, SideArc):
            return ImageFrame(self.t, blobs, arc_masks=self.arc_masks)
        if isinstance(t, PrimeEnd):
            ne = t.normal / abs(t.normal)
            kappa = np.conj(ne) * self.deriv * (-1.0 / np.conj(t.w) ** 2)
            return ImageFrame(self.t, blobs, pe_point=pole, pe_kappa=kappa)
        return ImageFrame(self.t, blobs, pole=pole)

    def guard_proximity(self) -> float:
        if not self.n_guard:
            return 0.0
        return float(np.abs(self.pts[self.n_bnd:self.n_bnd + self.n_guard]).max())

    def pole_proximity(self) -> float:
        return abs(self.pts[-1]) if self.has_pole else 0.0


def _check_guard(domain: DomainSpec, target: TargetSpec, guard) -> None:
    if guard is None:
        return
    from shapely.geometry import Point, Polygon
    poly = Polygon([(z.real, z.imag) for z in np.asarray(guard, dtype=complex)])
    if not poly.contains(Point(0.0, 0.0)):
        raise GuardNotSurrounding("guard curve must surround 0")
    if isinstance(target, InteriorPoint) and target.z is not None:
        if poly.covers(Point(target.z.real, target.z.imag)):
            raise GuardNotSurrounding("guard curve must avoid the target")
    if not domain.is_sphere:
        from shapely.geometry import Polygon as P2
        if not domain.polygon().covers(poly):
            raise GuardNotSurrounding("guard curve must stay inside the domain")


@dataclass
class LerwRun:
    """A solved continuous LERW (or (kappa, lambda)-process) sample path."""

    domain: DomainSpec
    target: TargetSpec
    kappa: float
    lam: float
    xi: DrivingPath
    t_start: float
    state: WholePlaneState
    event_times: np.ndarray
    X_samples: np.ndarray
    bundles: list
    stop_reason: str
    guard_time: float = np.nan
    truncation_estimate: float = 0.0

    def xi_at(self, t: float) -> float:
        return float(self.xi(t))


def solve_driving_sde(domain: DomainSpec, target: TargetSpec | None = None,
                      kappa: float = 2.0, lam: float = 2.0,
                      driver: DriverSample | None = None,
                      guard=None, t_end: float | None = None,
                      t_start: float | None = None, t_pad: float = 1.0,
                      dt: float = 1e-3, seed=None, x_every: float = 0.01,
                      fd_step: float = 0.02, want_bundles: bool = True,
                      guard_eps: float = 1e-3, pole_eps: float = 0.02,
                      stop_on_guard: bool = False,
                      n_per_component: int = 96,
                      c_fit: float | None = None) -> LerwRun:
    """Euler-Maruyama solution of xi = driver + lambda * int X dt.

    X is refreshed every ``x_every`` of capacity from the current state
    (the drift is Lipschitz in (t, xi), so the refresh cadence trades off
    against the field re-solve cost; halving ``x_every`` and ``dt`` are
    the convergence knobs).  Below ``t_start`` the drift tail is dropped:
    xi = driver on the pad interval, with the truncation error bounded by
    lambda * C * E_2(t_start).
    """
    if target is None:
        target = domain.target
    sphere_inf = domain.is_sphere and isinstance(target, InteriorPoint) \
        and target.is_infinity
    if t_start is None:
        t_start = default_t_start(domain, target, lam, c_fit=c_fit) \
            if (lam != 0.0 and not sphere_inf) else (-10.0 if domain.is_sphere
                                                     else np.log(domain.R / 4.0) - 8.0)
    if not domain.is_sphere and t_start > np.log(domain.R / 4.0) - 8.0 + 1e-9:
        raise TruncationTooLate(
            f"t_start={t_start} above ln(R/4) - 8 = {np.log(domain.R/4.0)-8.0:.3f}")
    _check_guard(domain, target, guard)
    if driver is None:
        if t_end is None:
            raise ValueError("need t_end when no driver is supplied")
        driver = sample_driver(kappa, t_start - t_pad, t_end, dt, seed)
    times = driver.times
    n = times.size - 1
    xi = driver.values.copy()
    trunc = 0.0
    if lam != 0.0 and not sphere_inf and not domain.is_sphere:
        cc = c_fit if c_fit is not None else fit_drift_constant(domain, target)
        trunc = abs(lam) * cc * float(envelope_e(2, t_start, domain.R))

    frame = _Frame(domain, target, float(times[0]), n_per_component, guard)
    angles = np.empty(n)
    caps = np.diff(times)
    ev_t, ev_x = [], []
    bundles = []
    x_cur = 0.0
    t_last_event = -np.inf
    guard_time = np.nan
    stop_reason = "reached_stop_time"
    k_stop = n
    drift_on = (lam != 0.0) and not sphere_inf
    events_on = drift_on or want_bundles or guard is not None

    for k in range(n):
        t_k = float(times[k])
        if events_on and t_k >= t_start - 1e-12 and t_k - t_last_event >= x_every - 1e-12:
            t_last_event = t_k
            if sphere_inf:
                ev_t.append(t_k)
                ev_x.append(0.0)
                if want_bundles:
                    bundles.append(DerivativeBundle(t_k, 1.0 / TWO_PI, 0.0, 0.0, 0.0))
            else:
                try:
                    snap = frame.snapshot()
                    spec = solve_image_field(snap, float(xi[k]),
                                             want_q=want_bundles,
                                             min_strip=4.0 * fd_step)
                    dy, dxy, dxxy, dy_q = spec.bundle(float(xi[k]))
                except (StripTooThin, NonPositiveDy):
                    stop_reason = "target_approached"
                    k_stop = k
                    break
                x_cur = dxy / dy
                ev_t.append(t_k)
                ev_x.append(x_cur)
                if want_bundles:
                    bundles.append(DerivativeBundle(t_k, dy, dxy, dxxy,
                                                    dy * dy_q - dxxy))
                if frame.pole_proximity() > 1.0 - pole_eps:
                    stop_reason = "target_approached"
                    k_stop = k
                    break
            prox = frame.guard_proximity()
            if np.isnan(guard_time) and prox > 1.0 - guard_eps:
                guard_time = t_k
                if stop_on_guard:
                    stop_reason = "hull_hit_guard"
                    k_stop = k
                    break
        drift = lam * x_cur if (drift_on and t_k >= t_start - 1e-12) else 0.0
        xi[k + 1] = xi[k] + (driver.values[k + 1] - driver.values[k]) + drift * caps[k]
        angles[k] = 0.5 * (xi[k] + xi[k + 1])
        frame.advance(angles[k], caps[k])

    state = WholePlaneState(float(times[0]), angles[:k_stop], caps[:k_stop])
    path = DrivingPath(times[:k_stop + 1], xi[:k_stop + 1], kappa,
                       anchor=float(xi[0]))
    return LerwRun(domain, target, kappa, lam, path, float(t_start), state,
                   np.asarray(ev_t), np.asarray(ev_x), bundles, stop_reason,
                   guard_time, trunc)


def drift_along_driving(domain: DomainSpec, target: TargetSpec | None,
                        xi_path: DrivingPath, t_start: float,
                        x_every: float = 0.01, fd_step: float = 0.02,
                        want_bundles: bool = False,
                        n_per_component: int = 96):
    """Record X (and bundles) along a fixed driving function.

    Returns (event_times, X_values, bundles); used by the Picard mode and
    by experiments that integrate X over externally produced hulls.
    """
    if target is None:
        target = domain.target
    times = xi_path.times
    n = times.size - 1
    frame = _Frame(domain, target, float(times[0]), n_per_component)
    ev_t, ev_x, bundles = [], [], []
    t_last = -np.inf
    for k in range(n + 1):
        t_k = float(times[k])
        if t_k >= t_start - 1e-12 and t_k - t_last >= x_every - 1e-12:
            snap = frame.snapshot()
            spec = solve_image_field(snap, float(xi_path.values[k]),
                                     want_q=want_bundles,
                                     min_strip=4.0 * fd_step)
            dy, dxy, dxxy, dy_q = spec.bundle(float(xi_path.values[k]))
            ev_t.append(t_k)
            ev_x.append(dxy / dy)
            if want_bundles:
                bundles.append(DerivativeBundle(t_k, dy, dxy, dxxy,
                                                dy * dy_q - dxxy))
            t_last = t_k
        if k < n:
            frame.advance(0.5 * (xi_path.values[k] + xi_path.values[k + 1]),
                          float(times[k + 1] - times[k]))
    return np.asarray(ev_t), np.asarray(ev_x), bundles


def solve_driving_picard(domain: DomainSpec, target: TargetSpec | None,
                         lam: float, f: DrivingPath, t_end: float,
                         tol: float = 1e-6, max_iter: int = 40,
                         x_every: float = 0.01, t_start: float | None = None,
                         ratio_guard: float = 0.9):
    """Picard iteration for the deterministic driving equation.

    Iterates xi_{n+1} = f + lambda * int X^{xi_n} until the sup-change is
    below ``tol``; requires ``t_end`` small enough that the fitted
    contraction bound C |lambda| E_2(t_end) is at most 1/2.
    """
    if target is None:
        target = domain.target
    c_fit = fit_drift_constant(domain, target)
    if abs(lam) * c_fit * float(envelope_e(2, t_end, domain.R)) > 0.5:
        raise NoContraction(
            "t_end too late: fitted C |lambda| E_2(t_end) exceeds 1/2")
    if t_start is None:
        t_start = default_t_start(domain, target, lam, c_fit=c_fit)
    m = (f.times <= t_end + 1e-12)
    times = f.times[m]
    base = f.values[m]
    xi = base.copy()
    ratios = []
    prev_change = None
    for it in range(max_iter):
        path = DrivingPath(times, xi)
        ev_t, ev_x, _ = drift_along_driving(domain, target, path, t_start,
                                            x_every=x_every)
        integral = _cum_drift(times, ev_t, ev_x, t_start)
        xi_next = base + lam * integral
        change = float(np.abs(xi_next - xi).max())
        if prev_change is not None and prev_change > 0:
            ratios.append(change / prev_change)
            if len(ratios) >= 3 and all(r > ratio_guard for r in ratios[-3:]):
                raise NoContraction(
                    f"sup-change ratio stayed above {ratio_guard} for 3 iterations")
        prev_change = change
        xi = xi_next
        if change <= tol:
            break
    else:
        raise NoContraction("Picard iteration did not converge")
    path = DrivingPath(times, xi, anchor=float(xi[0]))
    ev_t, ev_x, _ = drift_along_driving(domain, target, path, t_start,
                                        x_every=x_every)
    residual = float(np.abs(xi - base - lam * _cum_drift(times, ev_t, ev_x,
                                                         t_start)).max())
    return path, {"iterations": it + 1, "ratios": ratios, "residual": residual,
                  "t_start": t_start, "c_fit": c_fit}


def _cum_drift(times, ev_t, ev_x, t_start):
    """Cumulative integral of the piecewise-constant drift samples."""
    out = np.zeros(times.size)
    if len(ev_t) == 0:
        return out
    x_on_grid = np.zeros(times.size)
    live = times >= t_start - 1e-12
    idx = np.searchsorted(ev_t, times[live] + 1e-15) - 1
    idx = np.clip(idx, 0, len(ev_x) - 1)
    x_on_grid[live] = np.asarray(ev_x)[idx]
    dt = np.diff(times)
    out[1:] = np.cumsum(x_on_grid[:-1] * dt * live[:-1])
    return out


@dataclass(frozen=True)
class PartitionTrajectory:
    """Radon-Nikodym density process M(t) along a run."""

    times: np.ndarray
    M_values: np.ndarray
    alpha: float
    bundles: list

    @property
    def final(self) -> float:
        return float(self.M_values[-1])

    def at(self, t: float) -> float:
        i = int(np.searchsorted(self.times, t + 1e-12)) - 1
        return float(self.M_values[max(i, 0)])


def partition_function(run: LerwRun, alpha: float | None = None,
                       g0: float | None = None) -> PartitionTrajectory:
    """Density process M(t) of a (kappa, lambda)-process against SLE_kappa.

    ``alpha`` defaults to the run's lambda/kappa; to weigh a pure SLE
    ensemble (lambda = 0 runs) by the LERW density, pass the target
    process's alpha explicitly.  Assembled by trapezoid quadrature of the
    three bundle integrands, with the tails below the truncation time
    estimated as 0.  For the sphere the prefactor is (2 pi d_y)^alpha and
    M is identically 1 when the target is infinity; for bounded domains
    the prefactor is (sqrt(t^2+1) d_y / G(D, z_e; 0))^alpha and the time
    integrand carries the compensator s/(s^2+1), the log-derivative of
    sqrt(s^2+1).
    """
    if alpha is None:
        alpha = run.lam / run.kappa
    if not run.bundles:
        raise ValueError("run was produced without bundles")
    ts = np.array([b.t for b in run.bundles])
    dy = np.array([b.d_y for b in run.bundles])
    dxy = np.array([b.d_xy for b in run.bundles])
    dxxy = np.array([b.d_xxy for b in run.bundles])
    dtdy = np.array([b.d_t_dy for b in run.bundles])
    if np.any(dy <= 0):
        raise NonPositiveDy("bundle with nonpositive d_y")
    sphere = run.domain.is_sphere
    i1 = (dxy / dy) ** 2
    i2 = dxxy / dy
    i3 = dtdy / dy + (0.0 if sphere else ts / (ts ** 2 + 1.0))
    c1 = _cumtrapz(ts, i1)
    c2 = _cumtrapz(ts, i2)
    c3 = _cumtrapz(ts, i3)
    if sphere:
        pref = (TWO_PI * dy) ** alpha
    else:
        if g0 is None:
            g0 = grid_green_at_origin(run.domain)
        pref = (np.sqrt(ts ** 2 + 1.0) * dy / g0) ** alpha
    kap = run.kappa
    m = pref * np.exp(-0.5 * kap * alpha * (alpha - 1.0) * c1
                      - 0.5 * kap * alpha * c2 - alpha * c3)
    return PartitionTrajectory(ts, m, alpha, run.bundles)


def _cumtrapz(t, y):
    out = np.zeros(t.size)
    if t.size > 1:
        out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t))
    return out


def grid_green_at_origin(domain: DomainSpec, delta: float = 1 / 128,
                         _cache={}) -> float:
    """G(D, z_e; 0) from the independent grid solver (cached per domain)."""
    key = (id(domain), delta)
    if key not in _cache:
        from .domain import build_grid
        from .harmonic.gridfield import green_function
        grid = build_grid(domain, delta)
        f = green_function(grid)
        _cache[key] = float(f.values[grid.origin_index])
    return _cache[key]


def poisson_observable(run: LerwRun, z: complex, t: float, grid=None,
                       delta: float = 1 / 64, tip_radius: float = 1.5) -> float:
    """Generalized Poisson kernel P_t(z) of the hull complement, pole at
    the tip, normalized by P_t(z_e) = 1 (grid route).

    Computed as the hitting field of the tip's rasterized neighborhood
    (the Green-ratio limit) ratioed between z and z_e.
    """
    from .domain import build_grid
    from .harmonic.gridfield import hitting_probability

    target = run.target
    if not isinstance(target, InteriorPoint) or target.z is None:
        raise ValueError("poisson observable needs an interior point target")
    if grid is None:
        grid = build_grid(run.domain, delta)
    state = run.state.prefix_at_time(t)
    tips = state.trace()
    circ = np.exp(run.state.t_start) * np.exp(1j * np.linspace(0, TWO_PI, 17))
    hull_pts = np.concatenate([tips, circ])
    d = _min_dist(grid.points, hull_pts)
    tip = tips[-1] if tips.size else 0j
    hull_idx = np.flatnonzero(d < grid.delta)
    is_tip = np.abs(grid.points[hull_idx] - tip) < tip_radius * grid.delta
    if np.abs(z - tip) < 2 * grid.delta or \
       _min_dist(np.array([z]), hull_pts)[0] < grid.delta:
        raise PointInHull(f"evaluation point {z} too close to the hull")
    f = hitting_probability(grid, target_interior=hull_idx[is_tip],
                            forbidden_interior=hull_idx[~is_tip])
    num = float(f.interpolate(np.array([z]))[0])
    den = float(f.interpolate(np.array([target.z]))[0])
    if den <= 0:
        raise PointInHull("normalization point separated from the tip")
    return num / den


def _min_dist(pts, hull_pts, block: int = 4096):
    out = np.full(pts.size, np.inf)
    for i in range(0, hull_pts.size, block):
        chunk = hull_pts[i:i + block]
        out = np.minimum(out, np.min(np.abs(pts[:, None] - chunk[None, :]), axis=1))
    return out


def poisson_observable_spectral(run: LerwRun, z: complex, t: float,
                                n_modes: int = 12) -> float:
    """Spectral route for P_t(z): image-side kernel with pole e**(i xi(t)),
    corrected on the blobs, normalized at the image of z_e."""
    target = run.target
    if not isinstance(target, InteriorPoint) or target.z is None:
        raise ValueError("poisson observable needs an interior point target")
    state = run.state.prefix_at_time(t)
    xi_t = float(run.xi(state.t))
    from .harmonic.annulus import _Blob, _blob_columns
    from .harmonic.drift import frame_from_state
    frame = frame_from_state(state, run.domain, target)
    e = np.exp(1j * xi_t)

    def pole_term(w):
        return np.real((e + w) / (e - w))

    # correction basis: same Kelvin blob basis, data = -pole_term on blobs
    blobs = [_Blob(complex(np.mean(b)), float(np.abs(b - np.mean(b)).max()),
                   n_modes) for b in frame.blobs]
    zz = np.concatenate(frame.blobs)
    mat = np.hstack([_blob_columns(b, zz) for b in blobs])
    rhs = -pole_term(zz)
    sol, *_ = np.linalg.lstsq(mat, rhs, rcond=None)

    def total(w):
        w = np.atleast_1d(np.asarray(w, dtype=complex))
        cols = np.hstack([_blob_columns(b, w) for b in blobs])
        return pole_term(w) + cols @ sol

    zs = state.map_disk(np.array([1.0 / np.conj(z)], dtype=complex))
    if not np.isfinite(zs[0]):
        raise PointInHull(f"evaluation point {z} inside the hull")
    num = float(total(zs)[0])
    den = float(total(np.array([frame.pole]))[0])
    return num / den
