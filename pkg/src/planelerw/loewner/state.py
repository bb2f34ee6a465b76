"""Composed-map representation of whole-plane Loewner evolutions."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import elementary as em
from ..errors import NotNested

__all__ = ["WholePlaneState"]


@dataclass(frozen=True)
class WholePlaneState:
    """Whole-plane hull K_t as a stack of elementary slit maps.

    Below ``t_start`` the hull is approximated by the closed disk of radius
    ``e**t_start``; each subsequent record (``angles[j]``, ``caps[j]``) grows
    a radial slit of capacity ``caps[j]`` at driving angle ``angles[j]``.
    Capacity is additive by construction, so ``ccap(K_t) = t`` exactly.

    The exterior map ``phi_t`` sends the complement of K_t onto {|z|>1}
    with ``phi_t(z) ~ e**(-t) z`` at infinity; the inverted map
    ``psi_t = R_T . phi_t . R_T`` fixes 0 and maps onto the unit disk.
    States are immutable; ``extend`` returns a new state sharing the
    elementary-map prefix arrays.
    """

    t_start: float
    angles: np.ndarray = field(default_factory=lambda: np.empty(0))
    caps: np.ndarray = field(default_factory=lambda: np.empty(0))
    swallowed_tolerance: float = 1e-6

    def __post_init__(self):
        angles = np.asarray(self.angles, dtype=float)
        caps = np.asarray(self.caps, dtype=float)
        if angles.shape != caps.shape or angles.ndim != 1:
            raise ValueError("angles and caps must be matching 1-d arrays")
        if caps.size and np.any(caps <= 0):
            raise ValueError("capacity increments must be positive")
        object.__setattr__(self, "angles", angles)
        object.__setattr__(self, "caps", caps)

    # -- capacity calculus ----------------------------------------------
    @property
    def n_maps(self) -> int:
        return int(self.angles.size)

    @property
    def t(self) -> float:
        return float(self.t_start + self.caps.sum())

    @property
    def ccap(self) -> float:
        return self.t

    @property
    def rad(self) -> float:
        return float(np.exp(self.t))

    def map_times(self) -> np.ndarray:
        """Capacity time after each elementary map."""
        return self.t_start + np.cumsum(self.caps)

    def prefix(self, n: int) -> "WholePlaneState":
        """State after the first ``n`` elementary maps (shares arrays)."""
        return replace(self, angles=self.angles[:n], caps=self.caps[:n])

    def extend(self, angles, caps) -> "WholePlaneState":
        return replace(self,
                       angles=np.concatenate([self.angles, np.atleast_1d(angles)]),
                       caps=np.concatenate([self.caps, np.atleast_1d(caps)]))

    def prefix_at_time(self, t: float) -> "WholePlaneState":
        """Largest prefix with capacity <= t (within 1e-12 slack)."""
        if t < self.t_start - 1e-12:
            raise NotNested(f"time {t} precedes truncation time {self.t_start}")
        n = int(np.searchsorted(self.map_times(), t + 1e-12, side="right"))
        return self.prefix(n)

    # -- map evaluation ---------------------------------------------------
    def map_ext(self, z, with_swallowed: bool = False):
        """phi_t on exterior points; swallowed points become nan."""
        w = np.asarray(z, dtype=complex) * np.exp(-self.t_start)
        w = np.atleast_1d(w).copy()
        sw_time = np.full(w.shape, np.nan)
        sw_time[np.abs(np.asarray(z)) <= np.exp(self.t_start)] = self.t_start
        alive = np.isnan(sw_time)
        times = self.map_times()
        for j in range(self.n_maps):
            m = alive & em.swallowed_mask_ext(w, self.angles[j], self.caps[j])
            if m.any():
                sw_time[m] = times[j]
                alive &= ~m
            w[alive] = em.slit_map_ext(w[alive], self.angles[j], self.caps[j])
        w[~alive] = np.nan
        if with_swallowed:
            return w, sw_time
        return w

    def inv_map_ext(self, z):
        """phi_t^{-1} on {|z| >= 1}."""
        w = np.atleast_1d(np.asarray(z, dtype=complex)).copy()
        for j in range(self.n_maps - 1, -1, -1):
            w = em.inv_slit_map_ext(w, self.angles[j], self.caps[j])
        return w * np.exp(self.t_start)

    def map_disk(self, z, with_swallowed: bool = False):
        """psi_t on the inverted plane; fixes 0."""
        w = np.asarray(z, dtype=complex) * np.exp(self.t_start)
        w = np.atleast_1d(w).copy()
        # Inverted hull swallows points with |z| >= e^{-t_start} initially.
        sw_time = np.full(w.shape, np.nan)
        with np.errstate(over="ignore", invalid="ignore"):
            big = np.abs(np.atleast_1d(np.asarray(z))) >= np.exp(-self.t_start)
        sw_time[big] = self.t_start
        alive = np.isnan(sw_time)
        times = self.map_times()
        for j in range(self.n_maps):
            m = alive & em.swallowed_mask_ext(w, self.angles[j], self.caps[j])
            if m.any():
                sw_time[m] = times[j]
                alive &= ~m
            w[alive] = em.slit_map_disk(w[alive], self.angles[j], self.caps[j])
        w[~alive] = np.nan
        if with_swallowed:
            return w, sw_time
        return w

    def inv_map_disk(self, z):
        """psi_t^{-1} on the closed unit disk."""
        w = np.atleast_1d(np.asarray(z, dtype=complex)).copy()
        for j in range(self.n_maps - 1, -1, -1):
            w = em.inv_slit_map_disk(w, self.angles[j], self.caps[j])
        return w * np.exp(-self.t_start)

    def map_disk_deriv(self, z):
        """psi_t'(z) along with psi_t(z) (chain rule over the stack)."""
        w = np.atleast_1d(np.asarray(z, dtype=complex)) * np.exp(self.t_start)
        w = w.copy()
        d = np.full(w.shape, np.exp(self.t_start), dtype=complex)
        for j in range(self.n_maps):
            d = d * em.slit_map_deriv_disk(w, self.angles[j], self.caps[j])
            w = em.slit_map_disk(w, self.angles[j], self.caps[j])
        return w, d

    # -- trace ------------------------------------------------------------
    def trace(self, indices=None) -> np.ndarray:
        """Physical tip positions after selected elementary maps.

        ``indices`` are 1-based map counts (default: all).  Tip ``j`` is the
        preimage of the freshly grown slit tip under the first ``j-1`` maps,
        computed in one backward sweep over the stack.
        """
        if indices is None:
            indices = np.arange(1, self.n_maps + 1)
        indices = np.asarray(indices, dtype=int)
        if indices.size == 0:
            return np.empty(0, dtype=complex)
        if indices.min() < 1 or indices.max() > self.n_maps:
            raise ValueError("trace indices out of range")
        order = np.argsort(indices)[::-1]
        tips = em.slit_tip_radius(self.caps[indices - 1]) * np.exp(1j * self.angles[indices - 1])
        buf = np.empty(indices.size, dtype=complex)
        pos = np.empty(indices.size, dtype=int)
        count = 0
        ptr = 0
        for j in range(self.n_maps, 0, -1):
            while ptr < order.size and indices[order[ptr]] == j:
                buf[count] = tips[order[ptr]]
                pos[count] = order[ptr]
                count += 1
                ptr += 1
            if j > 1 and count:
                buf[:count] = em.inv_slit_map_ext(buf[:count], self.angles[j - 2], self.caps[j - 2])
        out = np.empty(indices.size, dtype=complex)
        out[pos[:count]] = buf[:count] * np.exp(self.t_start)
        return out
