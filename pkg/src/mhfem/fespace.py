"""P1 Lagrange spaces on the two subdomains and the interface multiplier space.

Each subdomain gets its own continuous P1 space, so a vertex on the
interface carries one degree of freedom per side.  Global numbering puts
all subdomain-0 dofs first, then all subdomain-1 dofs.
"""
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ConfigError, EvalError, GeometryError
from .mesh import Marker, extract_interface_traces


def _cross2(a, b):
    return a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]


def p1_geometry(corners):
    """Areas and basis gradients of P1 triangles.

    Parameters
    ----------
    corners : (nt, 3, 2) array
        Vertex coordinates of each triangle.

    Returns
    -------
    area : (nt,) ndarray
        Signed areas.
    grads : (nt, 3, 2) ndarray
        Constant gradient of each barycentric basis function.
    """
    p = np.asarray(corners, dtype=float)
    x, y = p[..., 0], p[..., 1]
    area = 0.5 * ((x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0])
                  - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0]))
    if np.any(area == 0):
        raise GeometryError("degenerate triangle (zero area)")
    inv2a = 0.5 / area
    grads = np.empty(p.shape)
    grads[:, 0, 0] = (y[:, 1] - y[:, 2]) * inv2a
    grads[:, 1, 0] = (y[:, 2] - y[:, 0]) * inv2a
    grads[:, 2, 0] = (y[:, 0] - y[:, 1]) * inv2a
    grads[:, 0, 1] = (x[:, 2] - x[:, 1]) * inv2a
    grads[:, 1, 1] = (x[:, 0] - x[:, 2]) * inv2a
    grads[:, 2, 1] = (x[:, 1] - x[:, 0]) * inv2a
    return area, grads


class TriangleLocator:
    """Bucket-grid point location in a set of triangles.

    Parameters
    ----------
    corners : (nt, 3, 2) array
        Triangle vertex coordinates.
    tol : float
        Relative barycentric slack for points on edges.
    """

    def __init__(self, corners, tol=1e-10):
        p = np.ascontiguousarray(corners, dtype=float)
        self.tol = tol
        nt = len(p)
        lo = p.min(axis=1)
        hi = p.max(axis=1)
        blo = lo.min(axis=0)
        bhi = hi.max(axis=0)
        span = np.maximum(bhi - blo, 1e-300)
        pad = 1e-9 * span.max()
        blo = blo - pad
        bhi = bhi + pad
        span = bhi - blo
        # bucket edge close to the mean triangle size
        size = np.sqrt(np.abs(0.5 * _cross2(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])).mean()) * 2
        nb = np.clip(np.ceil(span / max(size, 1e-300)), 1, 2048).astype(np.int64)
        self.nbx, self.nby = int(nb[0]), int(nb[1])
        self.origin = blo
        self.inv_cell = nb / span
        i0 = np.clip(np.floor((lo - blo) * self.inv_cell).astype(np.int64), 0, nb - 1)
        i1 = np.clip(np.floor((hi - blo) * self.inv_cell).astype(np.int64), 0, nb - 1)
        nx = i1[:, 0] - i0[:, 0] + 1
        ny = i1[:, 1] - i0[:, 1] + 1
        cnt = nx * ny
        tri = np.repeat(np.arange(nt, dtype=np.int64), cnt)
        k = np.arange(cnt.sum()) - np.repeat(np.cumsum(cnt) - cnt, cnt)
        bx = i0[tri, 0] + k % nx[tri]
        by = i0[tri, 1] + k // nx[tri]
        bucket = bx + self.nbx * by
        order = np.lexsort((tri, bucket))
        self.bucket_tris = np.ascontiguousarray(tri[order])
        counts = np.bincount(bucket, minlength=self.nbx * self.nby)
        self.bucket_ptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        self.p0 = np.ascontiguousarray(p[:, 0])
        m = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)  # columns e1, e2
        self.inv = np.ascontiguousarray(np.linalg.inv(m))

    def locate(self, points):
        """Return (triangle index or -1, barycentric coordinates) per point."""
        pts = np.ascontiguousarray(np.asarray(points, dtype=float).reshape(-1, 2))
        return _kernels.locate_points(pts, self.origin, self.inv_cell, self.nbx, self.nby,
                                      self.bucket_ptr, self.bucket_tris, self.p0, self.inv,
                                      self.tol)


@dataclass(frozen=True, eq=False)
class DofMap:
    """Continuous P1 space on one subdomain.

    Attributes
    ----------
    subdomain : int
    offset : int
        Global index of this space's first dof.
    vertex_ids : (n,) ndarray
        Mesh vertex of each local dof (sorted).
    dof_of_vertex : (nv,) ndarray
        Global dof of every mesh vertex, -1 if the vertex is not in this space.
    cells : (nc, 3) ndarray
        Local dofs of each subdomain triangle.
    cell_ids : (nc,) ndarray
        Mesh triangle index of each cell.
    dirichlet_dofs : ndarray
        Global dofs on ``OUTER_DIRICHLET`` edges.
    coords : (n, 2) ndarray
        Dof coordinates.
    """

    subdomain: int
    offset: int
    vertex_ids: np.ndarray
    dof_of_vertex: np.ndarray
    cells: np.ndarray
    cell_ids: np.ndarray
    dirichlet_dofs: np.ndarray
    coords: np.ndarray
    mesh: object = field(repr=False)
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def n_dofs(self):
        return len(self.vertex_ids)

    @property
    def dofs(self):
        return np.arange(self.offset, self.offset + self.n_dofs)

    @property
    def global_cells(self):
        return self.cells + self.offset

    @property
    def dirichlet_local(self):
        return self.dirichlet_dofs - self.offset

    def corners(self):
        """(nc, 3, 2) coordinates of the cell vertices."""
        return self.coords[self.cells]

    def geometry(self):
        """Cached ``(area, grads)`` of the cells."""
        if "geom" not in self._cache:
            self._cache["geom"] = p1_geometry(self.corners())
        return self._cache["geom"]

    def locator(self):
        if "loc" not in self._cache:
            self._cache["loc"] = TriangleLocator(self.corners())
        return self._cache["loc"]

    def local(self, values):
        """Restrict a global or local coefficient vector to this space."""
        v = np.asarray(values)
        if len(v) == self.n_dofs:
            return v
        if len(v) >= self.offset + self.n_dofs:
            return v[self.offset:self.offset + self.n_dofs]
        raise ConfigError(f"vector of length {len(v)} does not fit a space of "
                          f"{self.n_dofs} dofs at offset {self.offset}")


def build_space(mesh, subdomain, offset=0):
    """P1 space on triangles tagged ``subdomain``; dofs numbered from ``offset``."""
    if subdomain not in (0, 1):
        raise ConfigError(f"subdomain must be 0 or 1 (got {subdomain!r})")
    mask = mesh.subdomain == subdomain
    tri = mesh.triangles[mask]
    verts = np.unique(tri)
    local = -np.ones(mesh.n_vertices, dtype=np.int64)
    local[verts] = np.arange(len(verts))
    glob = np.where(local >= 0, local + offset, -1)
    dv = mesh.vertices_with(Marker.OUTER_DIRICHLET)
    dv = dv[local[dv] >= 0]
    cells = np.ascontiguousarray(local[tri])
    return DofMap(subdomain, int(offset), verts, glob, cells, np.nonzero(mask)[0],
                  np.sort(glob[dv]), mesh.vertices[verts], mesh)


@dataclass(frozen=True, eq=False)
class MultiplierSpace:
    """Continuous P1 space on the side-0 interface trace.

    Attributes
    ----------
    trace : InterfaceTrace
    node_vertices : (n,) ndarray
        Mesh vertex of each multiplier dof, ordered along the trace.
    seg_dofs : (k, 2) ndarray
        Dofs at the two ends of every trace segment.
    """

    trace: object
    node_vertices: np.ndarray
    seg_dofs: np.ndarray

    @property
    def n_dofs(self):
        return len(self.node_vertices)

    @property
    def dof_of_trace_vertex(self):
        return {int(v): i for i, v in enumerate(self.node_vertices)}


def build_multiplier_space(trace0):
    """One dof per side-0 trace vertex, continuous across polygon corners."""
    k = trace0.n_segments
    nodes = trace0.nodes
    first = np.arange(k)
    second = (first + 1) % k if trace0.closed else first + 1
    return MultiplierSpace(trace0, nodes, np.stack([first, second], axis=1))


@dataclass(frozen=True, eq=False)
class ProblemSpaces:
    """Both subdomain spaces plus the multiplier space of one mesh."""

    mesh: object
    space0: DofMap
    space1: DofMap
    mult: MultiplierSpace
    trace0: object
    trace1: object

    @property
    def n_w(self):
        return self.space0.n_dofs + self.space1.n_dofs

    @property
    def n_lambda(self):
        return self.mult.n_dofs

    @property
    def spaces(self):
        return (self.space0, self.space1)

    @property
    def dirichlet_dofs(self):
        return np.concatenate([self.space0.dirichlet_dofs, self.space1.dirichlet_dofs])

    def interface_dofs(self, side):
        """Global dofs of the interface vertices of ``side``, along the trace."""
        tr = self.trace0 if side == 0 else self.trace1
        sp = self.space0 if side == 0 else self.space1
        return sp.dof_of_vertex[tr.nodes]


def build_spaces(mesh):
    """Build :class:`ProblemSpaces` for a bi-domain mesh."""
    t0, t1 = extract_interface_traces(mesh)
    s0 = build_space(mesh, 0, 0)
    s1 = build_space(mesh, 1, s0.n_dofs)
    return ProblemSpaces(mesh, s0, s1, build_multiplier_space(t0), t0, t1)


def _eval_field(f, pts):
    vals = np.asarray(f(pts[:, 0], pts[:, 1]), dtype=float)
    vals = np.broadcast_to(vals, (len(pts),)).copy()
    if not np.all(np.isfinite(vals)):
        bad = int(np.nonzero(~np.isfinite(vals))[0][0])
        raise EvalError(f"field is not finite at {tuple(pts[bad])}")
    return vals


def interpolate(f, space):
    """Nodal interpolant of ``f(x, y)``.

    ``space`` is a :class:`DofMap` (returns its local vector) or
    :class:`ProblemSpaces` (returns the global vector).  Dirichlet dofs are
    set to 0.
    """
    if isinstance(space, ProblemSpaces):
        return np.concatenate([interpolate(f, space.space0), interpolate(f, space.space1)])
    vals = _eval_field(f, space.coords)
    vals[space.dirichlet_local] = 0.0
    return vals


def interpolate_pieces(f0, f1, spaces):
    """Global vector interpolating ``f0`` on subdomain 0 and ``f1`` on 1."""
    return np.concatenate([interpolate(f0, spaces.space0), interpolate(f1, spaces.space1)])


def evaluate(space, values, points, strict=True):
    """Point values of a P1 field on one subdomain.

    Returns ``(values, found)``; when ``strict`` a point outside the space
    raises :class:`GeometryError`.
    """
    v = space.local(values)
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    tri, bary = space.locator().locate(pts)
    found = tri >= 0
    if strict and not np.all(found):
        bad = pts[~found][0]
        raise GeometryError(f"point {tuple(bad)} lies outside subdomain {space.subdomain}")
    out = np.zeros(len(pts))
    c = space.cells[tri[found]]
    out[found] = (v[c] * bary[found]).sum(axis=1)
    return out, found


def evaluate_global(spaces, w, points, side=0):
    """Point values of a bi-domain field; points on the interface are taken
    from subdomain ``side``."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    first, second = (spaces.space0, spaces.space1) if side == 0 else (spaces.space1,
                                                                      spaces.space0)
    out, found = evaluate(first, w, pts, strict=False)
    if not np.all(found):
        rest, f2 = evaluate(second, w, pts[~found], strict=False)
        if not np.all(f2):
            bad = pts[~found][~f2][0]
            raise GeometryError(f"point {tuple(bad)} lies outside the mesh")
        out[~found] = rest
    return out


def eval_on_segment(space, values, p0, p1, n_samples, side=0):
    """Sample a P1 field at ``n_samples`` equally spaced points from p0 to p1.

    Parameters
    ----------
    space : DofMap or ProblemSpaces
        A single subdomain space, or both (``side`` picks the subdomain used
        for points on the interface).

    Returns
    -------
    s : ndarray
        Arc length of each sample from ``p0``.
    v : ndarray
        Field values.
    """
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    t = np.linspace(0.0, 1.0, int(n_samples))
    pts = p0[None] + t[:, None] * (p1 - p0)[None]
    if isinstance(space, ProblemSpaces):
        vals = evaluate_global(space, values, pts, side=side)
    else:
        vals, _ = evaluate(space, values, pts, strict=True)
    return t * np.linalg.norm(p1 - p0), vals
