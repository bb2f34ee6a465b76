"""Domain specifications and the square-lattice grid approximation.

Domains are polygonal (holes included); smooth boundaries are approximated
by user-supplied polygons, which keeps every point-in-polygon and
segment-intersection test exact at double precision via shapely.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import shapely
from shapely.geometry import LineString, Point, Polygon

from .errors import MeshTooCoarse, TargetUnreachable
from .targets import InteriorPoint, PrimeEnd, SideArc, TargetSpec

__all__ = ["DomainSpec", "GridGraph", "build_grid", "closest_interior_vertex",
           "regular_polygon", "disk_domain"]

_DIRS = np.array([1.0, 1j, -1.0, -1j])


def regular_polygon(n: int, radius: float = 1.0, center: complex = 0j) -> np.ndarray:
    """Positively oriented regular n-gon; vertices as a complex array."""
    th = 2.0 * np.pi * np.arange(n) / n
    return center + radius * np.exp(1j * th)


def disk_domain(target: TargetSpec, n_sides: int = 512, radius: float = 1.0,
                label: str = "disk") -> "DomainSpec":
    """Unit-disk-like polygonal domain with the given target."""
    return DomainSpec(outer=regular_polygon(n_sides, radius), holes=(),
                      target=target, label=label)


def _ring_coords(zs) -> list[tuple[float, float]]:
    return [(float(z.real), float(z.imag)) for z in zs]


@dataclass(frozen=True)
class DomainSpec:
    """Finitely connected planar domain with marked start point 0.

    ``outer`` is a positively oriented simple polygon (complex vertices) or
    ``None`` for the whole sphere; ``holes`` are disjoint simple polygons
    strictly inside.  The start point is fixed at 0 after normalization.
    """

    outer: np.ndarray | None
    holes: tuple = ()
    target: TargetSpec = field(default_factory=lambda: InteriorPoint(None))
    label: str = ""

    def __post_init__(self):
        if self.outer is not None:
            outer = np.asarray(self.outer, dtype=complex)
            object.__setattr__(self, "outer", outer)
            object.__setattr__(self, "holes",
                               tuple(np.asarray(h, dtype=complex) for h in self.holes))
            poly = self.polygon()
            if not poly.is_valid:
                raise ValueError("invalid domain polygon")
            if not poly.contains(Point(0.0, 0.0)):
                raise ValueError("start point 0 must lie inside the domain")
            if isinstance(self.target, InteriorPoint):
                if self.target.z is None:
                    raise ValueError("bounded domain cannot target infinity")
                if self.target.z == 0:
                    raise ValueError("target must differ from the start point")
                if not poly.contains(Point(self.target.z.real, self.target.z.imag)):
                    raise ValueError("point target must lie inside the domain")
        else:
            if self.holes:
                raise ValueError("sphere domain has no holes")
            if not (isinstance(self.target, InteriorPoint)):
                raise ValueError("sphere domain supports point targets only")
            if self.target.z == 0:
                raise ValueError("target must differ from the start point")

    # -- geometry helpers -------------------------------------------------
    @property
    def is_sphere(self) -> bool:
        return self.outer is None

    def polygon(self) -> Polygon:
        return Polygon(_ring_coords(self.outer), [_ring_coords(h) for h in self.holes])

    def boundary_components(self) -> list[np.ndarray]:
        """Vertex arrays, outer ring first."""
        return [self.outer, *self.holes]

    def sample_boundary(self, per_unit_length: float = 64.0, min_per_edge: int = 1):
        """Point samples of each boundary component, in ring order."""
        out = []
        for ring in self.boundary_components():
            pts = []
            m = ring.size
            for i in range(m):
                a, b = ring[i], ring[(i + 1) % m]
                k = max(int(np.ceil(np.abs(b - a) * per_unit_length)), min_per_edge)
                pts.append(a + (b - a) * np.arange(k) / k)
            out.append(np.concatenate(pts))
        return out

    def dist_start_to_boundary(self) -> float:
        if self.is_sphere:
            return np.inf
        return float(self.polygon().boundary.distance(Point(0.0, 0.0)))

    @property
    def R(self) -> float:
        """dist(0, boundary and target), the basic scale of the run."""
        r = self.dist_start_to_boundary()
        t = self.target
        if isinstance(t, InteriorPoint) and t.z is not None:
            r = min(r, abs(t.z))
        return r

    # -- JSON interface ----------------------------------------------------
    def to_json(self) -> str:
        t = self.target
        if isinstance(t, InteriorPoint):
            tgt = {"kind": "point",
                   "z": None if t.z is None else [t.z.real, t.z.imag]}
        elif isinstance(t, SideArc):
            tgt = {"kind": "arc", "from": [t.a.real, t.a.imag], "to": [t.b.real, t.b.imag]}
        else:
            tgt = {"kind": "prime_end", "z": [t.w.real, t.w.imag],
                   "normal": [t.normal.real, t.normal.imag]}
        obj = {
            "outer": "sphere" if self.is_sphere else
                     [[z.real, z.imag] for z in self.outer],
            "holes": [[[z.real, z.imag] for z in h] for h in self.holes],
            "target": tgt,
            "label": self.label,
        }
        return json.dumps(obj)

    @classmethod
    def from_json(cls, text: str) -> "DomainSpec":
        obj = json.loads(text)
        tgt = obj["target"]
        if tgt["kind"] == "point":
            target = InteriorPoint(None if tgt["z"] is None
                                   else complex(tgt["z"][0], tgt["z"][1]))
        elif tgt["kind"] == "arc":
            target = SideArc(complex(*tgt["from"]), complex(*tgt["to"]))
        elif tgt["kind"] == "prime_end":
            target = PrimeEnd(complex(*tgt["z"]), complex(*tgt["normal"]))
        else:
            raise ValueError(f"unknown target kind {tgt['kind']!r}")
        outer = None if obj["outer"] == "sphere" else \
            np.array([complex(x, y) for x, y in obj["outer"]])
        holes = tuple(np.array([complex(x, y) for x, y in h]) for h in obj.get("holes", []))
        return cls(outer, holes, target, obj.get("label", ""))


@dataclass(frozen=True)
class GridGraph:
    """delta*Z^2 approximation of a domain, restricted to the component of 0.

    Interior vertices are lattice points of the domain; every interior
    vertex has exactly four graph neighbors.  ``neighbors[i, d] >= 0``
    indexes another interior vertex; a negative entry ``-(1+p)`` indexes
    the boundary pair ``p`` with anchor ``i`` and boundary point
    ``boundary_point[p]`` on the domain boundary.
    """

    delta: float
    points: np.ndarray            # (Ni,) complex, lexicographically sorted
    neighbors: np.ndarray         # (Ni, 4) int
    boundary_anchor: np.ndarray   # (Nb,) int, interior index of z1
    boundary_point: np.ndarray    # (Nb,) complex, z2 on the boundary
    boundary_dir: np.ndarray      # (Nb,) int, direction code 0..3
    origin_index: int
    target_interior: int | None = None
    target_pairs: np.ndarray | None = None
    domain: DomainSpec | None = None

    @property
    def n_interior(self) -> int:
        return int(self.points.size)

    @property
    def n_boundary(self) -> int:
        return int(self.boundary_anchor.size)

    @property
    def interior(self) -> np.ndarray:
        return self.points

    def boundary_pairs(self):
        """Iterator of (z1, z2) pairs in index order."""
        for p in range(self.n_boundary):
            yield (self.points[self.boundary_anchor[p]], self.boundary_point[p])

    def adjacency(self, i: int):
        """Neighbor list of interior vertex i: interior indices and
        ('boundary', pair_index) tags."""
        out = []
        for code in self.neighbors[i]:
            out.append(int(code) if code >= 0 else ("boundary", int(-1 - code)))
        return out

    def index_of(self, z: complex) -> int:
        i = int(np.searchsorted(self._lexkeys(), _lexkey(z, self.delta)))
        if i >= self.points.size or self.points[i] != z:
            raise KeyError(f"{z} is not an interior vertex")
        return i

    def _lexkeys(self):
        return _lexkey(self.points, self.delta)


def _lexkey(z, delta):
    zr = np.round(np.real(z) / delta).astype(np.int64)
    zi = np.round(np.imag(z) / delta).astype(np.int64)
    return zr * (2 ** 31) + zi


def build_grid(domain: DomainSpec, delta: float) -> GridGraph:
    """Construct the lattice approximation of ``domain`` at mesh ``delta``.

    Boundary pairs <z1, z2> take z2 as the first intersection of the open
    lattice segment with the boundary; grazing contacts are classified by
    the midpoint test, which keeps construction deterministic.
    """
    if domain.is_sphere:
        raise MeshTooCoarse("sphere domains have no grid approximation")
    poly = domain.polygon()
    bnd = poly.boundary
    minx, miny, maxx, maxy = poly.bounds
    jx = np.arange(int(np.floor(minx / delta)) - 1, int(np.ceil(maxx / delta)) + 2)
    jy = np.arange(int(np.floor(miny / delta)) - 1, int(np.ceil(maxy / delta)) + 2)
    gx, gy = np.meshgrid(jx * delta, jy * delta, indexing="ij")
    inside = shapely.contains_xy(poly, gx.ravel(), gy.ravel()).reshape(gx.shape)
    # exclude lattice points exactly on the boundary (contains is strict)
    if not inside[np.searchsorted(jx, 0), np.searchsorted(jy, 0)]:
        raise MeshTooCoarse("0 is not an interior lattice point of the domain")

    nx, ny = inside.shape
    idx = -np.ones(inside.shape, dtype=np.int64)

    # candidate interior edges: both endpoints inside and segment in domain
    def seg_ok(i1, j1, i2, j2):
        a = np.column_stack([gx[i1, j1], gy[i1, j1]])
        b = np.column_stack([gx[i2, j2], gy[i2, j2]])
        lines = shapely.linestrings(np.stack([a, b], axis=1))
        ok = shapely.covers(poly, lines)
        # grazing contact: resolved by the midpoint test
        touch = ok & shapely.intersects(bnd, lines)
        if touch.any():
            mid = 0.5 * (a[touch] + b[touch])
            ok[touch] = shapely.contains_xy(poly, mid[:, 0], mid[:, 1])
        return ok

    ii, jj = np.nonzero(inside)
    right_ok = np.zeros(inside.shape, dtype=bool)
    up_ok = np.zeros(inside.shape, dtype=bool)
    m = (ii + 1 < nx)
    cand = m & inside[np.minimum(ii + 1, nx - 1), jj]
    if cand.any():
        right_ok[ii[cand], jj[cand]] = seg_ok(ii[cand], jj[cand], ii[cand] + 1, jj[cand])
    m = (jj + 1 < ny)
    cand = m & inside[ii, np.minimum(jj + 1, ny - 1)]
    if cand.any():
        up_ok[ii[cand], jj[cand]] = seg_ok(ii[cand], jj[cand], ii[cand], jj[cand] + 1)

    # connected component of 0 through interior edges
    comp = np.zeros(inside.shape, dtype=bool)
    i0, j0 = np.searchsorted(jx, 0), np.searchsorted(jy, 0)
    stack = [(i0, j0)]
    comp[i0, j0] = True
    while stack:
        i, j = stack.pop()
        if i + 1 < nx and right_ok[i, j] and not comp[i + 1, j]:
            comp[i + 1, j] = True
            stack.append((i + 1, j))
        if i > 0 and right_ok[i - 1, j] and not comp[i - 1, j]:
            comp[i - 1, j] = True
            stack.append((i - 1, j))
        if j + 1 < ny and up_ok[i, j] and not comp[i, j + 1]:
            comp[i, j + 1] = True
            stack.append((i, j + 1))
        if j > 0 and up_ok[i, j - 1] and not comp[i, j - 1]:
            comp[i, j - 1] = True
            stack.append((i, j - 1))

    ci, cj = np.nonzero(comp)
    pts = gx[ci, cj] + 1j * gy[ci, cj]
    order = np.lexsort((pts.imag, pts.real))
    pts = pts[order]
    ci, cj = ci[order], cj[order]
    idx[ci, cj] = np.arange(pts.size)
    origin_index = int(idx[i0, j0])

    # neighbor table and boundary pairs
    neighbors = np.empty((pts.size, 4), dtype=np.int64)
    b_anchor, b_point, b_dir = [], [], []
    steps = [(1, 0), (0, 1), (-1, 0), (0, -1)]
    for d, (si, sj) in enumerate(steps):
        ni, nj = ci + si, cj + sj
        ok_edge = np.zeros(pts.size, dtype=bool)
        inb = (ni >= 0) & (ni < nx) & (nj >= 0) & (nj < ny)
        if d == 0:
            ok_edge[inb] = right_ok[ci[inb], cj[inb]]
        elif d == 2:
            ok_edge[inb] = right_ok[ni[inb], nj[inb]]
        elif d == 1:
            ok_edge[inb] = up_ok[ci[inb], cj[inb]]
        else:
            ok_edge[inb] = up_ok[ni[inb], nj[inb]]
        ok_edge &= inb
        ok_edge[ok_edge] &= comp[ni[ok_edge], nj[ok_edge]]
        neighbors[ok_edge, d] = idx[ni[ok_edge], nj[ok_edge]]
        # remaining legs cross the boundary: first intersection of [z1, z3)
        for k in np.flatnonzero(~ok_edge):
            z1 = pts[k]
            z3 = z1 + delta * _DIRS[d]
            seg = LineString([(z1.real, z1.imag), (z3.real, z3.imag)])
            inter = bnd.intersection(seg)
            z2 = _first_hit(inter, z1)
            if z2 is None:
                # neighbor in component but segment grazes: keep as edge
                if inb[k] and comp[ni[k] % nx, nj[k] % ny]:
                    neighbors[k, d] = idx[ni[k], nj[k]]
                    continue
                raise MeshTooCoarse(
                    f"no boundary intersection for leg at {z1} direction {d}")
            p = len(b_anchor)
            b_anchor.append(k)
            b_point.append(z2)
            b_dir.append(d)
            neighbors[k, d] = -(1 + p)

    b_anchor = np.asarray(b_anchor, dtype=np.int64)
    b_point = np.asarray(b_point, dtype=complex)
    b_dir = np.asarray(b_dir, dtype=np.int64)

    grid = GridGraph(delta, pts, neighbors, b_anchor, b_point, b_dir,
                     origin_index, domain=domain)
    return _resolve_target(grid, domain)


def _first_hit(inter, z1) -> complex | None:
    """Closest point of an intersection result to z1 (None if empty)."""
    if inter.is_empty:
        return None
    best, bd = None, np.inf
    geoms = getattr(inter, "geoms", [inter])
    for g in geoms:
        if g.geom_type == "Point":
            cand = [(g.x, g.y)]
        else:
            cand = list(g.coords)
        for x, y in cand:
            d = abs(complex(x, y) - z1)
            if d < bd:
                bd, best = d, complex(x, y)
    return best


def _ring_param(ring: np.ndarray, z: complex) -> float:
    """Arc-length parameter of the closest boundary point to z on a ring."""
    m = ring.size
    best, best_s = np.inf, 0.0
    s = 0.0
    for i in range(m):
        a, b = ring[i], ring[(i + 1) % m]
        ell = abs(b - a)
        if ell == 0:
            continue
        t = np.clip(((z - a) / (b - a)).real, 0.0, 1.0)
        d = abs(z - (a + t * (b - a)))
        if d < best:
            best, best_s = d, s + t * ell
        s += ell
    return best_s


def _resolve_target(grid: GridGraph, domain: DomainSpec) -> GridGraph:
    from dataclasses import replace

    t = domain.target
    if isinstance(t, InteriorPoint):
        if t.z is None:
            raise TargetUnreachable("no grid target for the point at infinity")
        w = closest_interior_vertex(grid, t.z)
        return replace(grid, target_interior=int(grid.index_of(w)))
    if isinstance(t, SideArc):
        ring = domain.outer
        s_a = _ring_param(ring, t.a)
        s_b = _ring_param(ring, t.b)
        sel = []
        for p in range(grid.n_boundary):
            s = _ring_param(ring, grid.boundary_point[p])
            if _on_arc(s, s_a, s_b):
                # only pairs whose boundary point is on the outer ring
                d = abs(_project_ring(ring, grid.boundary_point[p]) - grid.boundary_point[p])
                if d < 1e-9 * max(1.0, np.abs(ring).max()):
                    sel.append(p)
        if not sel:
            raise TargetUnreachable("no boundary vertex lies on the target arc")
        return replace(grid, target_pairs=np.asarray(sel, dtype=np.int64))
    # prime end: requires w_e on the lattice and a flat boundary piece
    w = t.w
    if abs(w / grid.delta - np.round(w.real / grid.delta) - 1j * np.round(w.imag / grid.delta)) > 1e-9:
        raise TargetUnreachable(
            "prime-end target requires the boundary point on the delta-lattice")
    inward = w + 1j * (t.normal / abs(t.normal)) * 0  # normal direction itself
    anchor = w + (t.normal / abs(t.normal)) * grid.delta
    sel = []
    for p in range(grid.n_boundary):
        if abs(grid.boundary_point[p] - w) < 1e-9 and \
           abs(grid.points[grid.boundary_anchor[p]] - anchor) < 1e-9:
            sel.append(p)
    if not sel:
        raise TargetUnreachable("no boundary vertex determines the prime end")
    return replace(grid, target_pairs=np.asarray(sel, dtype=np.int64))


def _project_ring(ring: np.ndarray, z: complex) -> complex:
    m = ring.size
    best, bz = np.inf, ring[0]
    for i in range(m):
        a, b = ring[i], ring[(i + 1) % m]
        if a == b:
            continue
        t = np.clip(((z - a) / (b - a)).real, 0.0, 1.0)
        w = a + t * (b - a)
        d = abs(z - w)
        if d < best:
            best, bz = d, w
    return bz


def _on_arc(s, s_a, s_b):
    if s_a <= s_b:
        return s_a - 1e-12 <= s <= s_b + 1e-12
    return s >= s_a - 1e-12 or s <= s_b + 1e-12


def closest_interior_vertex(grid: GridGraph, z: complex) -> complex:
    """Interior vertex minimizing |v - z|; ties break lexicographically."""
    d = np.abs(grid.points - z)
    m = d.min()
    cand = np.flatnonzero(d <= m + 1e-15)
    # points are lex-sorted, so the first candidate is the tie-break winner
    return complex(grid.points[cand[0]])
