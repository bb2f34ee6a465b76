"""Sparse Dirichlet solvers and discrete harmonic fields on a GridGraph.

Two discretizations coexist on purpose.  The plain graph Laplacian (equal
1/4 weights, boundary pairs as ordinary neighbors) is what the random
walk sees, so every walk-law object (hitting probabilities, h-transform
fields, the discrete martingale fields) uses it and is solved by CG on
the symmetric positive-definite system.  Continuum fields (Green's
function, harmonic measure, Poisson kernels) instead use the
Shortley-Weller stencil with the true boundary leg lengths, which
restores second-order max-norm accuracy; that system is mildly
nonsymmetric and is solved directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..domain import GridGraph, _lexkey
from ..errors import (Disconnected, EmptyArc, PoleOnBoundary, SolverDiverged,
                      TargetDisconnected)

__all__ = ["HarmonicField", "solve_dirichlet", "green_function",
           "harmonic_measure", "hitting_probability", "discrete_harmonic_g"]

TWO_PI = 2.0 * np.pi


@dataclass
class HarmonicField:
    """Grid solution of a Dirichlet problem.

    ``values`` covers every interior vertex (solved unknowns and prescribed
    ones); ``pair_values`` covers boundary pairs.  ``residual`` is the max
    discrete-Laplacian residual over the solved unknowns.  For Green-type
    fields the logarithmic pole is split off analytically: ``values`` holds
    the full field while ``correction``/``pole`` allow exact evaluation of
    the singular part during interpolation.
    """

    grid: GridGraph
    values: np.ndarray
    pair_values: np.ndarray
    kind: str
    residual: float
    meta: dict = field(default_factory=dict)
    correction: np.ndarray | None = None
    pole: complex | None = None

    def interpolate(self, z):
        """Bilinear interpolation at off-lattice points.

        Missing cell corners (boundary or excluded vertices) contribute the
        zero extension of the field; Green-type fields interpolate the
        smooth correction and add the exact log term.
        """
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        vals = self.correction if self.correction is not None else self.values
        out = _bilinear(self.grid, vals, z)
        if self.correction is not None:
            out = out - np.log(np.abs(z - self.pole)) / TWO_PI
        return out

    def to_csv(self) -> str:
        import io
        buf = io.StringIO()
        buf.write("vertex_x,vertex_y,value\n")
        np.savetxt(buf, np.column_stack([self.grid.points.real,
                                         self.grid.points.imag, self.values]),
                   fmt="%.17g", delimiter=",")
        return buf.getvalue()


def _bilinear(grid: GridGraph, vals: np.ndarray, z: np.ndarray) -> np.ndarray:
    d = grid.delta
    fx = np.floor(z.real / d)
    fy = np.floor(z.imag / d)
    tx = z.real / d - fx
    ty = z.imag / d - fy
    keys = grid._lexkeys()
    out = np.zeros(z.shape, dtype=float)
    for (ox, oy, w) in ((0, 0, (1 - tx) * (1 - ty)), (1, 0, tx * (1 - ty)),
                        (0, 1, (1 - tx) * ty), (1, 1, tx * ty)):
        corner = (fx + ox) * d + 1j * (fy + oy) * d
        k = _lexkey(corner, d)
        pos = np.searchsorted(keys, k)
        pos_c = np.clip(pos, 0, keys.size - 1)
        hit = keys[pos_c] == k
        out += np.where(hit, vals[pos_c] * w, 0.0)
    return out


def _leg_lengths(grid: GridGraph):
    """(Ni, 4) leg lengths: delta for interior legs, |z2-z1| for boundary legs."""
    d = np.full(grid.neighbors.shape, grid.delta, dtype=float)
    if grid.n_boundary:
        anchors = grid.boundary_anchor
        dirs = grid.boundary_dir
        lengths = np.abs(grid.boundary_point - grid.points[anchors])
        d[anchors, dirs] = np.maximum(lengths, 1e-6 * grid.delta)
    return d


def solve_dirichlet(grid: GridGraph, boundary_values, interior_idx=None,
                    interior_values=None, legs: bool = False, tol: float = 1e-10,
                    maxiter: int | None = None, kind: str = "dirichlet",
                    meta: dict | None = None) -> HarmonicField:
    """Solve the discrete Dirichlet problem on the grid.

    ``boundary_values`` prescribes all boundary pairs; ``interior_idx`` /
    ``interior_values`` prescribe excluded interior vertices (hulls, path
    prefixes, targets).  With ``legs=False`` the field is 5-point
    discrete-harmonic at every non-excluded interior vertex (graph
    Laplacian, CG on the SPD system); with ``legs=True`` the
    Shortley-Weller stencil is used and solved directly.
    """
    ni = grid.n_interior
    bvals = np.asarray(boundary_values, dtype=float)
    if bvals.shape != (grid.n_boundary,):
        raise ValueError("boundary_values must cover all boundary pairs")
    fixed = np.zeros(ni, dtype=bool)
    fixed_vals = np.zeros(ni)
    if interior_idx is not None and len(interior_idx):
        interior_idx = np.asarray(interior_idx, dtype=np.int64)
        fixed[interior_idx] = True
        fixed_vals[interior_idx] = np.asarray(interior_values, dtype=float)
    free = ~fixed
    nfree = int(free.sum())
    pos = -np.ones(ni, dtype=np.int64)
    pos[free] = np.arange(nfree)

    nbr = grid.neighbors
    if legs:
        ell = _leg_lengths(grid)
        opp = ell[:, [2, 3, 0, 1]]
        w = 2.0 / (ell * (ell + opp))
    else:
        w = np.ones((ni, 4))

    rows, cols, data = [], [], []
    rhs = np.zeros(nfree)
    diag = w.sum(axis=1)
    fi = np.flatnonzero(free)
    rows.append(pos[fi]); cols.append(pos[fi]); data.append(diag[fi])
    for d4 in range(4):
        code = nbr[fi, d4]
        wt = w[fi, d4]
        is_int = code >= 0
        # interior neighbor: unknown or prescribed
        tgt = code[is_int]
        tfree = free[tgt]
        rows.append(pos[fi[is_int][tfree]])
        cols.append(pos[tgt[tfree]])
        data.append(-wt[is_int][tfree])
        np.add.at(rhs, pos[fi[is_int][~tfree]],
                  wt[is_int][~tfree] * fixed_vals[tgt[~tfree]])
        # boundary pair: data on the right-hand side
        pr = -(1 + code[~is_int])
        np.add.at(rhs, pos[fi[~is_int]], wt[~is_int] * bvals[pr])

    a = sp.csr_matrix((np.concatenate(data),
                       (np.concatenate(rows), np.concatenate(cols))),
                      shape=(nfree, nfree))
    if legs:
        x = spla.spsolve(a.tocsc(), rhs)
    else:
        if maxiter is None:
            maxiter = 40 * int(np.sqrt(nfree) + 100)
        scale = max(float(np.abs(rhs).max()), 1e-30)
        x, info = spla.cg(a, rhs, rtol=0.0, atol=0.25 * tol * scale, maxiter=maxiter)
        if info != 0:
            raise SolverDiverged(f"CG failed to reach tolerance (info={info})")
    res = float(np.abs(a @ x - rhs).max()) / max(float(np.abs(diag[fi]).max()), 1.0)
    if res > 50 * tol:
        raise SolverDiverged(f"residual {res:.3e} above tolerance")
    values = fixed_vals.copy()
    values[free] = x
    return HarmonicField(grid, values, bvals, kind, res, meta or {})


def green_function(grid: GridGraph, extra_hull=None, pole=None) -> HarmonicField:
    """Discrete approximation of the Green's function with pole at a vertex.

    The log singularity is split off analytically: the grid solves the
    smooth correction u with data ln|z - pole| / (2 pi) on the boundary
    (and on ``extra_hull`` vertices), and the returned field is
    -ln|z - pole| / (2 pi) + u with exact log evaluation at interpolation
    time.  Positive on the component of the pole.
    """
    if pole is None:
        pole = grid.target_interior
    if pole is None:
        raise PoleOnBoundary("no pole vertex given")
    pole = int(pole)
    zp = grid.points[pole]
    extra = np.asarray(extra_hull if extra_hull is not None else [], dtype=np.int64)
    if np.isin(pole, extra):
        raise PoleOnBoundary("pole lies in the excluded hull")
    bvals = np.log(np.abs(grid.boundary_point - zp)) / TWO_PI
    ivals = np.log(np.maximum(np.abs(grid.points[extra] - zp), 1e-300)) / TWO_PI
    f = solve_dirichlet(grid, bvals, extra, ivals, legs=True, kind="green",
                        meta={"pole_index": pole})
    with np.errstate(divide="ignore"):
        log_term = np.log(np.abs(grid.points - zp)) / TWO_PI
    f.correction = f.values.copy()
    f.pole = zp
    f.values = f.values - log_term
    f.pair_values = f.pair_values - np.log(np.abs(grid.boundary_point - zp)) / TWO_PI
    return f


def harmonic_measure(grid: GridGraph, extra_hull=None, arc_pairs=None) -> HarmonicField:
    """Harmonic measure of a boundary arc: data 1 on the arc's boundary
    vertices, 0 elsewhere (and 0 on ``extra_hull``)."""
    if arc_pairs is None:
        arc_pairs = grid.target_pairs
    if arc_pairs is None or len(arc_pairs) == 0:
        raise EmptyArc("no boundary vertices on the arc")
    bvals = np.zeros(grid.n_boundary)
    bvals[np.asarray(arc_pairs, dtype=np.int64)] = 1.0
    extra = np.asarray(extra_hull if extra_hull is not None else [], dtype=np.int64)
    return solve_dirichlet(grid, bvals, extra, np.zeros(extra.size), legs=True,
                           kind="harmonic_measure")


def hitting_probability(grid: GridGraph, target_interior=None, target_pairs=None,
                        forbidden_interior=None, from_vertex=None,
                        tol: float = 1e-10) -> HarmonicField:
    """Probability that the walk hits the target set before the rest of
    the boundary (graph Laplacian; this is the Doob h-transform field).

    Boundary pairs outside ``target_pairs`` are forbidden (value 0).
    """
    ti = np.asarray(target_interior if target_interior is not None else [],
                    dtype=np.int64)
    tp = np.asarray(target_pairs if target_pairs is not None else [],
                    dtype=np.int64)
    fi = np.asarray(forbidden_interior if forbidden_interior is not None else [],
                    dtype=np.int64)
    if ti.size + tp.size == 0:
        raise TargetDisconnected("empty target set")
    bvals = np.zeros(grid.n_boundary)
    bvals[tp] = 1.0
    idx = np.concatenate([ti, fi])
    vals = np.concatenate([np.ones(ti.size), np.zeros(fi.size)])
    f = solve_dirichlet(grid, bvals, idx, vals, legs=False, tol=tol,
                        kind="hitting_probability")
    if from_vertex is not None and f.values[int(from_vertex)] <= 0.0:
        raise TargetDisconnected("start vertex is disconnected from the target")
    return f


def discrete_harmonic_g(grid: GridGraph, prefix, tip: int, target_interior=None,
                        target_pairs=None) -> HarmonicField:
    """Discrete harmonic field of the growing LERW path.

    Vanishes on the boundary and on the path prefix except its tip, is
    graph-harmonic off the prefix, and is normalized to 1 at the target
    vertex (point target) or to unit discrete flux into the target arc.
    """
    prefix = np.asarray(prefix, dtype=np.int64)
    tip = int(tip)
    if prefix.size and prefix[-1] != tip:
        raise ValueError("tip must be the last vertex of the prefix")
    ti = np.asarray(target_interior if target_interior is not None else [],
                    dtype=np.int64)
    tp = np.asarray(target_pairs if target_pairs is not None else [],
                    dtype=np.int64)
    if np.isin(prefix, ti).any():
        raise Disconnected("target vertex lies on the path prefix")
    bvals = np.zeros(grid.n_boundary)
    fixed_idx = prefix
    fixed_vals = np.zeros(prefix.size)
    fixed_vals[prefix == tip] = 1.0
    f = solve_dirichlet(grid, bvals, fixed_idx, fixed_vals, legs=False,
                        kind="discrete_g")
    if ti.size:
        norm = float(f.values[ti[0]])
    elif tp.size:
        # unit discrete flux into the arc: sum over arc pairs of
        # (value at anchor - 0)
        norm = float(f.values[grid.boundary_anchor[tp]].sum())
    else:
        raise Disconnected("no target to normalize against")
    if not norm > 0.0:
        raise Disconnected("tip is separated from the target")
    f.values = f.values / norm
    f.pair_values = f.pair_values / norm
    f.meta["normalization"] = norm
    return f
