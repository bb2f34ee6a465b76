"""Spectral image-side evaluation of the drift field.

After the inverted whole-plane map ``psi_t``, the complement of the hull
becomes the unit disk minus tiny "blobs" near 0: the images of the
reflected domain boundary components, with the target data carried along
(pole image, marked arc image, or prime-end dipole).  The field J whose
strip derivatives drive the evolution is harmonic there and vanishes on
the unit circle, so it is represented as a pole/dipole part plus per-blob
log charges and multipole expansions, each antisymmetrized under the
Kelvin reflection across the circle (hence exactly zero on it).  A small
least-squares collocation on the blob boundaries determines the
coefficients, and all strip derivatives at the driving point follow
analytically from the representation.  The companion field Q entering
the time derivative of the partition function solves the same collocation
problem with different boundary data, so both come from one factorization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NonPositiveDy, StripTooThin

__all__ = ["ImageFrame", "SpectralField", "solve_image_field"]

TWO_PI = 2.0 * np.pi


@dataclass
class ImageFrame:
    """Image-side geometry under psi_t at capacity time t.

    ``blobs``: per-component image samples of the reflected boundary;
    ``pole``: image of the reflected interior target (Green case);
    ``arc_masks``: per-blob flags marking the reflected target arc
    (harmonic-measure case); ``pe_point``/``pe_kappa``: prime-end pole
    image and dipole strength (normalized-Poisson-kernel case).
    """

    t: float
    blobs: list
    pole: complex | None = None
    arc_masks: list | None = None
    pe_point: complex | None = None
    pe_kappa: complex | None = None

    @property
    def target_kind(self) -> str:
        if self.pole is not None:
            return "point"
        if self.arc_masks is not None:
            return "arc"
        if self.pe_point is not None:
            return "prime_end"
        return "sphere_infinity"

    def strip_height(self) -> float:
        """Height of the annular strip guaranteed free of blobs and pole."""
        r = 0.0
        for b in self.blobs:
            r = max(r, float(np.abs(b).max()))
        if self.pole is not None:
            r = max(r, abs(self.pole))
        if self.pe_point is not None:
            r = max(r, abs(self.pe_point))
        return np.inf if r == 0.0 else float(-np.log(r))


# -- fixed singular parts ---------------------------------------------------
# each is (part, f) with f(z) -> (F, F', F'', F''') for the analytic
# representative; the harmonic function is Re[F] or Im[F].

def _green_pole_pair(p):
    pb = np.conj(p)

    def f(z):
        z = np.asarray(z, dtype=complex)
        v = -(np.log(z - p) - np.log(1.0 - pb * z)) / TWO_PI
        d1 = -(1.0 / (z - p) + pb / (1.0 - pb * z)) / TWO_PI
        d2 = -(-1.0 / (z - p) ** 2 + pb ** 2 / (1.0 - pb * z) ** 2) / TWO_PI
        d3 = -(2.0 / (z - p) ** 3 + 2.0 * pb ** 3 / (1.0 - pb * z) ** 3) / TWO_PI
        return v, d1, d2, d3

    return ("re", f)


def _dipole_pair(w, kappa):
    wb = np.conj(w)
    kb = np.conj(kappa)

    def f(z):
        z = np.asarray(z, dtype=complex)
        v = kappa / (z - w) - kb * z / (1.0 - wb * z)
        d1 = -kappa / (z - w) ** 2 - kb / (1.0 - wb * z) ** 2
        d2 = 2.0 * kappa / (z - w) ** 3 - 2.0 * kb * wb / (1.0 - wb * z) ** 3
        d3 = -6.0 * kappa / (z - w) ** 4 - 6.0 * kb * wb ** 2 / (1.0 - wb * z) ** 4
        return v, d1, d2, d3

    return ("re", f)


def _part_value(part, tup):
    return np.real(tup[0]) if part == "re" else np.imag(tup[0])


# -- vectorized Kelvin blob basis -------------------------------------------
# per blob: column 0 is the log pair, then for k = 1..K the Re and Im
# multipole pairs
#   Re[(s/(z-c))^k - (s z/(1-conj(c) z))^k],
#   Im[(s/(z-c))^k + (s z/(1-conj(c) z))^k].

@dataclass(frozen=True)
class _Blob:
    c: complex
    s: float
    K: int

    @property
    def ncols(self) -> int:
        return 1 + 2 * self.K


def _blob_columns(blob: _Blob, z):
    """Basis values at points z: array (len(z), 1 + 2K)."""
    z = np.asarray(z, dtype=complex).ravel()
    c, s, K = blob.c, blob.s, blob.K
    cb = np.conj(c)
    out = np.empty((z.size, blob.ncols))
    out[:, 0] = (np.log(np.abs(z - c)) - np.log(np.abs(1.0 - cb * z))
                 + np.log(np.abs(z)))
    q = s / (z - c)
    h = s * z / (1.0 - cb * z)
    qp = np.cumprod(np.broadcast_to(q[:, None], (z.size, K)), axis=1)
    hp = np.cumprod(np.broadcast_to(h[:, None], (z.size, K)), axis=1)
    out[:, 1::2] = np.real(qp) - np.real(hp)
    out[:, 2::2] = np.imag(qp) + np.imag(hp)
    return out


def _blob_complex_derivs(blob: _Blob, z0: complex):
    """(F, F', F'', F''') for all columns at a single point, as (4, ncols)."""
    c, s, K = blob.c, blob.s, blob.K
    cb = np.conj(c)
    ks = np.arange(1, K + 1, dtype=float)
    a = (s / (z0 - c)) ** ks
    a1 = -ks * a / (z0 - c)
    a2 = ks * (ks + 1) * a / (z0 - c) ** 2
    a3 = -ks * (ks + 1) * (ks + 2) * a / (z0 - c) ** 3
    g = s * z0 / (1.0 - cb * z0)
    g1 = s / (1.0 - cb * z0) ** 2
    g2 = 2.0 * s * cb / (1.0 - cb * z0) ** 3
    g3 = 6.0 * s * cb ** 2 / (1.0 - cb * z0) ** 4
    gk = g ** ks
    h1 = ks * gk / g * g1
    h2 = ks * (ks - 1) * gk / g ** 2 * g1 ** 2 + ks * gk / g * g2
    h3 = (ks * (ks - 1) * (ks - 2) * gk / g ** 3 * g1 ** 3
          + 3 * ks * (ks - 1) * gk / g ** 2 * g1 * g2 + ks * gk / g * g3)
    out = np.empty((4, blob.ncols), dtype=complex)
    out[0, 0] = np.log(z0 - c) - np.log(1.0 - cb * z0) + np.log(z0)
    out[1, 0] = 1.0 / (z0 - c) + cb / (1.0 - cb * z0) + 1.0 / z0
    out[2, 0] = -1.0 / (z0 - c) ** 2 + cb ** 2 / (1.0 - cb * z0) ** 2 - 1.0 / z0 ** 2
    out[3, 0] = 2.0 / (z0 - c) ** 3 + 2.0 * cb ** 3 / (1.0 - cb * z0) ** 3 + 2.0 / z0 ** 3
    out[0, 1::2] = a - gk
    out[0, 2::2] = a + gk
    out[1, 1::2] = a1 - h1
    out[1, 2::2] = a1 + h1
    out[2, 1::2] = a2 - h2
    out[2, 2::2] = a2 + h2
    out[3, 1::2] = a3 - h3
    out[3, 2::2] = a3 + h3
    return out


def _col_parts(blob: _Blob):
    """True where the column's harmonic part is the real part."""
    re_part = np.zeros(blob.ncols, dtype=bool)
    re_part[0] = True
    re_part[1::2] = True
    return re_part


def _strip_deriv_rows(blob: _Blob, x: float):
    """Rows (d_y, d_xy, d_xxy) of every column at the circle point e**(ix).

    With F-hat(u) = F(e**(iu)) analytic in u, d_y Re/Im[F-hat] are
    -Im/+Re of F-hat', and similarly for higher x-derivatives of d_y.
    """
    z0 = np.exp(1j * x)
    d = _blob_complex_derivs(blob, z0)
    f1 = 1j * z0 * d[1]
    f2 = -z0 * d[1] - z0 * z0 * d[2]
    f3 = -1j * z0 * d[1] - 3j * z0 * z0 * d[2] - 1j * z0 ** 3 * d[3]
    re_part = _col_parts(blob)
    rows = np.empty((3, blob.ncols))
    for i, fk in enumerate((f1, f2, f3)):
        rows[i] = np.where(re_part, -np.imag(fk), np.real(fk))
    return rows


def _fixed_strip_derivs(fixed_terms, x: float):
    z0 = np.exp(1j * x)
    dy = dxy = dxxy = 0.0
    for part, f in fixed_terms:
        v, d1, d2, d3 = f(np.array([z0]))
        f1 = 1j * z0 * d1[0]
        f2 = -z0 * d1[0] - z0 * z0 * d2[0]
        f3 = -1j * z0 * d1[0] - 3j * z0 * z0 * d2[0] - 1j * z0 ** 3 * d3[0]
        if part == "re":
            dy += -np.imag(f1); dxy += -np.imag(f2); dxxy += -np.imag(f3)
        else:
            dy += np.real(f1); dxy += np.real(f2); dxxy += np.real(f3)
    return float(dy), float(dxy), float(dxxy)


@dataclass
class SpectralField:
    """Solved image-side field: fixed singular part plus blob expansion."""

    frame: ImageFrame
    fixed_terms: list
    blobs: list
    coef_j: np.ndarray
    coef_q: np.ndarray | None
    misfit: float

    def eval_jtilde(self, u):
        """J-tilde on the covering strip: J(e**(iu)) for complex u."""
        z = np.exp(1j * np.asarray(u, dtype=complex)).ravel()
        out = np.zeros(z.size, dtype=float)
        for part, f in self.fixed_terms:
            out = out + _part_value(part, f(z))
        if self.blobs:
            cols = np.hstack([_blob_columns(b, z) for b in self.blobs])
            out = out + cols @ self.coef_j
        return out.reshape(np.shape(u))

    def _derivs(self, x: float, coeffs, include_fixed: bool):
        dy, dxy, dxxy = (_fixed_strip_derivs(self.fixed_terms, x)
                         if include_fixed else (0.0, 0.0, 0.0))
        if self.blobs:
            rows = np.hstack([_strip_deriv_rows(b, x) for b in self.blobs])
            dy += float(rows[0] @ coeffs)
            dxy += float(rows[1] @ coeffs)
            dxxy += float(rows[2] @ coeffs)
        return dy, dxy, dxxy

    def bundle(self, x: float):
        """(d_y, d_xy, d_xxy, d_y Q) of the lifted fields at ``x``."""
        dy, dxy, dxxy = self._derivs(x, self.coef_j, include_fixed=True)
        dy_q = 0.0
        if self.coef_q is not None and self.coef_q.size:
            dy_q, _, _ = self._derivs(x, self.coef_q, include_fixed=False)
        if not dy > 0.0:
            raise NonPositiveDy(f"d_y J-tilde = {dy} at the driving point")
        return dy, dxy, dxxy, dy_q


def solve_image_field(frame: ImageFrame, xi_t: float, n_modes: int = 12,
                      want_q: bool = True, min_strip: float = 0.0) -> SpectralField:
    """Collocate the image-side field(s) on the blob boundaries.

    ``xi_t`` is the current driving value (the Q data depend on it).  The
    basis is per-blob: one Kelvin log pair plus ``n_modes`` Re/Im
    multipole pairs; the target contributes the fixed singular part.
    """
    h = frame.strip_height()
    if h <= min_strip:
        raise StripTooThin(f"strip height {h:.3f} below required {min_strip:.3f}")
    kind = frame.target_kind
    if kind == "point":
        fixed = [_green_pole_pair(frame.pole)]
    elif kind == "prime_end":
        fixed = [_dipole_pair(frame.pe_point, frame.pe_kappa)]
    elif kind == "sphere_infinity":
        # exact: J = -ln|z| / (2 pi)
        fixed = [_green_pole_pair(0j)]
    else:
        fixed = []

    if kind == "sphere_infinity" or not frame.blobs:
        return SpectralField(frame, fixed, [],
                             np.empty(0), np.empty(0) if want_q else None, 0.0)

    blobs, samples, rhs_j = [], [], []
    for bi, blob_pts in enumerate(frame.blobs):
        c = complex(np.mean(blob_pts))
        s = float(np.abs(blob_pts - c).max())
        blobs.append(_Blob(c, s, n_modes))
        keep = np.ones(blob_pts.size, dtype=bool)
        if kind == "prime_end":
            d = np.abs(blob_pts - frame.pe_point)
            spacing = float(np.median(np.abs(np.diff(blob_pts)))) if blob_pts.size > 1 else 0.0
            keep = d > 2.5 * spacing
        samples.append(blob_pts[keep])
        if kind == "arc":
            rhs_j.append(frame.arc_masks[bi][keep].astype(float))
        else:
            rhs_j.append(np.zeros(int(keep.sum())))

    z = np.concatenate(samples)
    b_j = np.concatenate(rhs_j)
    for part, f in fixed:
        b_j = b_j - _part_value(part, f(z))
    mat = np.hstack([_blob_columns(b, z) for b in blobs])
    if want_q:
        e = np.exp(1j * xi_t)
        b_q = np.real((e + z) / (e - z))
        rhs = np.column_stack([b_j, b_q])
    else:
        rhs = b_j[:, None]
    sol, *_ = np.linalg.lstsq(mat, rhs, rcond=None)
    misfit = float(np.abs(mat @ sol[:, 0] - b_j).max())
    coef_q = sol[:, 1] if want_q else None
    return SpectralField(frame, fixed, blobs, sol[:, 0], coef_q, misfit)
