"""Elementary slit maps for capacity-parameterized Loewner composition.

The building block is the Koebe-type function ``K(u) = u / (1 + u)**2``,
which maps both the unit disk and its exterior onto the plane slit along
``[1/4, inf)`` and satisfies ``K(1/u) = K(u)``.  Running the radial /
whole-plane Loewner flow for a capacity increment ``dcap`` under constant
driving angle ``c`` multiplies ``K(e**(-ic) z)`` by ``e**dcap``, so each
increment is an explicit conformal map: the exterior branch grows a radial
slit attached to the unit circle at ``e**(ic)`` from outside, the disk
branch grows the reflected slit from inside.

A whole-plane evolution is represented as a composition of these maps on
top of the scaling initialization ``z -> e**(-t0) z`` (hull approximated
by the closed disk of radius ``e**t0`` below the truncation time ``t0``).
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "koebe",
    "koebe_inv_ext",
    "koebe_inv_disk",
    "slit_map_ext",
    "slit_map_disk",
    "inv_slit_map_ext",
    "inv_slit_map_disk",
    "slit_tip_radius",
    "slit_cap_from_radius",
    "slit_map_deriv_disk",
]


def koebe(u):
    """K(u) = u/(1+u)^2, symmetric under u -> 1/u."""
    return u / (1.0 + u) ** 2


def _sqrt_slit(w):
    # sqrt(1 - 4w) with the principal branch; 1 - 4w avoids (-inf, 0]
    # exactly when w avoids [1/4, inf).
    return np.sqrt(1.0 - 4.0 * w)


def koebe_inv_ext(w):
    """Exterior branch of K^{-1}: maps C \\ [1/4, inf) onto {|z| > 1}."""
    return ((1.0 - 2.0 * w) + _sqrt_slit(w)) / (2.0 * w)


def koebe_inv_disk(w):
    """Disk branch of K^{-1}: maps C \\ [1/4, inf) onto {|z| < 1}.

    Uses the rationalized form 2w / ((1-2w) + sqrt(1-4w)), stable for
    small w where the naive difference cancels.
    """
    return 2.0 * w / ((1.0 - 2.0 * w) + _sqrt_slit(w))


def slit_map_ext(z, angle, dcap):
    """Forward exterior elementary map (capacity increment ``dcap``).

    Maps {|z|>1} minus the radial slit of capacity ``dcap`` at ``e**(i*angle)``
    onto {|z|>1}.  Points on the slit itself have no image; use
    :func:`swallowed_mask_ext` to detect them.
    """
    rot = np.exp(-1j * angle)
    w = np.exp(dcap) * koebe(rot * z)
    return np.conj(rot) * koebe_inv_ext(w)


def slit_map_disk(z, angle, dcap):
    """Forward disk-side elementary map (inverted whole-plane flow)."""
    rot = np.exp(-1j * angle)
    w = np.exp(dcap) * koebe(rot * z)
    return np.conj(rot) * koebe_inv_disk(w)


def inv_slit_map_ext(z, angle, dcap):
    """Inverse of :func:`slit_map_ext`; defined on all of {|z| >= 1}."""
    rot = np.exp(-1j * angle)
    w = np.exp(-dcap) * koebe(rot * z)
    return np.conj(rot) * koebe_inv_ext(w)


def inv_slit_map_disk(z, angle, dcap):
    """Inverse of :func:`slit_map_disk`; defined on all of {|z| <= 1}."""
    rot = np.exp(-1j * angle)
    w = np.exp(-dcap) * koebe(rot * z)
    return np.conj(rot) * koebe_inv_disk(w)


def swallowed_mask_ext(z, angle, dcap, tol=1e-12):
    """True where ``slit_map_ext`` would land on the cut [1/4, inf)."""
    w = np.exp(dcap) * koebe(np.exp(-1j * angle) * z)
    return (np.abs(np.imag(w)) <= tol * (1.0 + np.abs(w))) & (np.real(w) >= 0.25 * (1.0 - 1e-12))


def slit_tip_radius(dcap):
    """Radius s > 1 of the exterior slit tip: K(s) = e^{-dcap}/4."""
    return np.real(koebe_inv_ext(np.exp(-dcap) / 4.0 + 0j))


def slit_cap_from_radius(s):
    """Capacity of the exterior radial slit [1, s]: inverse of tip radius.

    dcap = 2 ln(1+s) - ln s - ln 4, which is ~ (s-1)^2/4 for s near 1.
    """
    s = np.asarray(s, dtype=float)
    return 2.0 * np.log1p(s) - np.log(s) - np.log(4.0)


def slit_map_deriv_disk(z, angle, dcap):
    """Derivative of the forward disk-side elementary map at ``z``.

    d/dz [rot^* Kinv_disk(e^d K(rot z))] = e^d K'(rot z) / K'(map(z)).
    """
    rot = np.exp(-1j * angle)
    u = rot * z
    w = np.exp(dcap) * koebe(u)
    v = koebe_inv_disk(w)
    kp_u = (1.0 - u) / (1.0 + u) ** 3
    kp_v = (1.0 - v) / (1.0 + v) ** 3
    return np.exp(dcap) * kp_u / kp_v
