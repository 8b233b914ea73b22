"""Bi-domain triangular meshes with an interior interface.

A :class:`Mesh` stores one triangulation of the whole domain with every
triangle tagged as subdomain 0 (the bounded habitat) or 1 (its complement).
The interface is represented twice, once per side, by boundary edges marked
``INTERFACE_SIDE0`` and ``INTERFACE_SIDE1``.  The two edge sets cover the same
polyline but need not share vertices (nonconformal meshes).

Generators are deterministic structured constructions:

* :func:`gen_rect_bidomain` - rectangle inside a rectangle,
* :func:`gen_disk_bidomain` - polygonal disk inside a circle,
* :func:`gen_strip_bidomain` - two strips glued along a vertical line.
"""
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigError, GeometryError, MeshTopologyError


class Marker(IntEnum):
    """Boundary edge markers."""

    OUTER_DIRICHLET = 1
    OUTER_ROBIN = 2
    OUTER_NEUMANN = 3
    INTERFACE_SIDE0 = 4
    INTERFACE_SIDE1 = 5


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Mesh:
    """Immutable bi-domain triangulation.

    Parameters
    ----------
    vertices : (nv, 2) array_like
        Vertex coordinates.
    triangles : (nt, 3) array_like of int
        Counter-clockwise vertex indices.
    subdomain : (nt,) array_like of int
        0 or 1 per triangle.
    boundary_edges : (ne, 2) array_like of int
        Vertex pairs of marked edges.
    boundary_markers : (ne,) array_like of int
        One :class:`Marker` value per edge.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    subdomain: np.ndarray
    boundary_edges: np.ndarray
    boundary_markers: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "vertices", _frozen(self.vertices, float).reshape(-1, 2))
        object.__setattr__(self, "triangles", _frozen(self.triangles, np.int64).reshape(-1, 3))
        object.__setattr__(self, "subdomain", _frozen(self.subdomain, np.int8).reshape(-1))
        object.__setattr__(self, "boundary_edges",
                           _frozen(self.boundary_edges, np.int64).reshape(-1, 2))
        object.__setattr__(self, "boundary_markers",
                           _frozen(self.boundary_markers, np.int8).reshape(-1))
        if len(self.subdomain) != len(self.triangles):
            raise ConfigError("subdomain tags must match the triangle count")
        if len(self.boundary_markers) != len(self.boundary_edges):
            raise ConfigError("boundary markers must match the edge count")

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @property
    def areas(self):
        """Signed triangle areas."""
        if "areas" not in self._cache:
            p = self.vertices[self.triangles]
            e1 = p[:, 1] - p[:, 0]
            e2 = p[:, 2] - p[:, 0]
            self._cache["areas"] = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
        return self._cache["areas"]

    @property
    def h(self):
        """Longest edge length over all triangles."""
        if "h" not in self._cache:
            self._cache["h"] = float(edge_lengths(self).max()) if self.n_triangles else 0.0
        return self._cache["h"]

    @property
    def diameter(self):
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return float(np.hypot(*(hi - lo)))

    def edges_with(self, marker):
        """Vertex pairs of all boundary edges carrying ``marker``."""
        return self.boundary_edges[self.boundary_markers == int(marker)]

    def vertices_with(self, marker):
        """Sorted unique vertex indices touched by edges carrying ``marker``."""
        return np.unique(self.edges_with(marker))

    def subdomain_vertices(self, sub):
        """Sorted unique vertex indices used by triangles of subdomain ``sub``."""
        return np.unique(self.triangles[self.subdomain == sub])

    def same_as(self, other):
        """Structural identity (exact coordinates, connectivity and tags)."""
        return (np.array_equal(self.vertices, other.vertices)
                and np.array_equal(self.triangles, other.triangles)
                and np.array_equal(self.subdomain, other.subdomain)
                and np.array_equal(self.boundary_edges, other.boundary_edges)
                and np.array_equal(self.boundary_markers, other.boundary_markers))


def edge_lengths(mesh):
    """(nt, 3) edge lengths; column k is the edge opposite vertex k."""
    p = mesh.vertices[mesh.triangles]
    return np.stack([
        np.linalg.norm(p[:, 2] - p[:, 1], axis=1),
        np.linalg.norm(p[:, 0] - p[:, 2], axis=1),
        np.linalg.norm(p[:, 1] - p[:, 0], axis=1),
    ], axis=1)


# ---------------------------------------------------------------------------
# interface traces

@dataclass(frozen=True, eq=False)
class InterfaceTrace:
    """One side's trace of the triangulation on the interface.

    Segments are ordered end to end and oriented so that the unit normal
    from subdomain 0 into subdomain 1 is the right-hand normal of the
    segment direction.

    Attributes
    ----------
    side : int
        0 or 1.
    points : (k, 2, 2) ndarray
        Segment endpoint coordinates.
    vertex_ids : (k, 2) ndarray
        Mesh vertex indices of the endpoints (-1 when built from points).
    owners : (k,) ndarray
        Index of the triangle owning each segment (-1 when built from points).
    normals : (k, 2) ndarray
        Unit normals pointing from subdomain 0 into subdomain 1.
    closed : bool
        Whether the last segment ends where the first starts.
    """

    side: int
    points: np.ndarray
    vertex_ids: np.ndarray
    owners: np.ndarray
    normals: np.ndarray
    closed: bool

    @classmethod
    def from_points(cls, points, side=0, closed=False):
        """Build a trace from an ordered polyline (no mesh attached)."""
        pts = np.asarray(points, dtype=float)
        seg = np.stack([pts[:-1], pts[1:]], axis=1)
        if closed:
            seg = np.concatenate([seg, [[pts[-1], pts[0]]]])
        d = seg[:, 1] - seg[:, 0]
        nrm = np.stack([d[:, 1], -d[:, 0]], axis=1) / np.linalg.norm(d, axis=1)[:, None]
        k = len(seg)
        return cls(side, seg, -np.ones((k, 2), np.int64), -np.ones(k, np.int64), nrm, closed)

    @property
    def n_segments(self):
        return len(self.points)

    @property
    def lengths(self):
        return np.linalg.norm(self.points[:, 1] - self.points[:, 0], axis=1)

    @property
    def total_length(self):
        return float(self.lengths.sum())

    @property
    def segments(self):
        """List of ``((p0, p1), owner, normal)`` tuples."""
        return [((tuple(p[0]), tuple(p[1])), int(o), tuple(n))
                for p, o, n in zip(self.points, self.owners, self.normals)]

    @property
    def nodes(self):
        """Ordered distinct vertex ids along the trace."""
        ids = self.vertex_ids[:, 0]
        if self.closed:
            return ids.copy()
        return np.append(ids, self.vertex_ids[-1, 1])

    @property
    def node_points(self):
        """Ordered distinct vertex coordinates along the trace."""
        if self.closed:
            return self.points[:, 0].copy()
        return np.vstack([self.points[:, 0], self.points[-1:, 1]])

    def turning_angle_sum(self):
        """Sum of signed turning angles between consecutive segments."""
        d = self.points[:, 1] - self.points[:, 0]
        nxt = np.roll(d, -1, axis=0) if self.closed else d[1:]
        cur = d if self.closed else d[:-1]
        cross = cur[:, 0] * nxt[:, 1] - cur[:, 1] * nxt[:, 0]
        dot = (cur * nxt).sum(axis=1)
        return float(np.arctan2(cross, dot).sum())


def _edge_owners(mesh):
    """Map sorted vertex pair -> list of (triangle, local edge index)."""
    tri = mesh.triangles
    loc = np.array([[1, 2], [2, 0], [0, 1]])
    pairs = tri[:, loc]  # (nt, 3, 2)
    key = np.sort(pairs, axis=2).reshape(-1, 2)
    owner = np.repeat(np.arange(len(tri)), 3)
    local = np.tile(np.arange(3), len(tri))
    return key, owner, local


def _owning_triangles(mesh, edges, sub):
    """For each edge, the unique triangle of subdomain ``sub`` containing it
    and the edge oriented as in that triangle's counter-clockwise order."""
    key, owner, local = _edge_owners(mesh)
    mask = mesh.subdomain[owner] == sub
    key, owner, local = key[mask], owner[mask], local[mask]
    nv = max(mesh.n_vertices, 1)
    code = key[:, 0] * nv + key[:, 1]
    order = np.argsort(code, kind="stable")
    code_s = code[order]
    e = np.sort(edges, axis=1)
    q = e[:, 0] * nv + e[:, 1]
    lo = np.searchsorted(code_s, q, side="left")
    hi = np.searchsorted(code_s, q, side="right")
    bad = np.nonzero(hi - lo != 1)[0]
    if len(bad):
        raise MeshTopologyError(
            f"{len(bad)} interface edge(s) on side {sub} are not owned by exactly "
            f"one subdomain-{sub} triangle (first: vertices {tuple(edges[bad[0]])})")
    t = owner[order[lo]]
    le = local[order[lo]]
    tri = mesh.triangles[t]
    a = tri[np.arange(len(t)), (le + 1) % 3]
    b = tri[np.arange(len(t)), (le + 2) % 3]
    return t, np.stack([a, b], axis=1)


def _chain(oriented):
    """Order directed edges end to end; returns (order, closed)."""
    n = len(oriented)
    if n == 0:
        raise MeshTopologyError("interface has no segments")
    nxt = {}
    for i, (a, _) in enumerate(oriented):
        if a in nxt:
            raise MeshTopologyError(f"interface vertex {a} starts two segments")
        nxt[a] = i
    ends = {b for _, b in oriented}
    starts = [i for i, (a, _) in enumerate(oriented) if a not in ends]
    if len(starts) > 1:
        raise MeshTopologyError("interface trace is not a single connected polyline")
    closed = not starts
    if closed:
        # canonical start: the lowest vertex id
        first = min(range(n), key=lambda i: oriented[i][0])
    else:
        first = starts[0]
    order = [first]
    seen = {first}
    cur = first
    while True:
        b = oriented[cur][1]
        j = nxt.get(b)
        if j is None or j == first:
            break
        if j in seen:
            raise MeshTopologyError("interface trace revisits a segment")
        order.append(j)
        seen.add(j)
        cur = j
    if len(order) != n:
        raise MeshTopologyError(
            f"interface trace is disconnected ({len(order)} of {n} segments chained)")
    if closed and oriented[order[-1]][1] != oriented[first][0]:
        raise MeshTopologyError("closed interface trace does not close up")
    return order, closed


def edge_subdomain(mesh, edges):
    """Subdomain of the unique triangle containing each boundary edge."""
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    key, owner, _ = _edge_owners(mesh)
    nv = max(mesh.n_vertices, 1)
    code = key[:, 0] * nv + key[:, 1]
    order = np.argsort(code, kind="stable")
    code_s = code[order]
    e = np.sort(edges, axis=1)
    q = e[:, 0] * nv + e[:, 1]
    lo = np.searchsorted(code_s, q, side="left")
    hi = np.searchsorted(code_s, q, side="right")
    if np.any(hi - lo != 1):
        raise MeshTopologyError("boundary edge is not owned by exactly one triangle")
    return mesh.subdomain[owner[order[lo]]].astype(np.int64)


def _build_trace(mesh, side):
    marker = Marker.INTERFACE_SIDE0 if side == 0 else Marker.INTERFACE_SIDE1
    edges = mesh.edges_with(marker)
    owners, oriented = _owning_triangles(mesh, edges, side)
    if side == 1:
        # walk side 1 with subdomain 1 on the right
        oriented = oriented[:, ::-1]
    order, closed = _chain([tuple(e) for e in oriented.tolist()])
    oriented = oriented[order]
    owners = owners[order]
    pts = mesh.vertices[oriented]
    d = pts[:, 1] - pts[:, 0]
    ln = np.linalg.norm(d, axis=1)
    if np.any(ln <= 0):
        raise GeometryError("zero-length interface segment")
    normals = np.stack([d[:, 1], -d[:, 0]], axis=1) / ln[:, None]
    return InterfaceTrace(side, pts, oriented, owners, normals, closed)


def extract_interface_traces(mesh):
    """Return the side-0 and side-1 interface traces of ``mesh``.

    Both traces are oriented identically (subdomain 0 on the left) and their
    normals point from subdomain 0 into subdomain 1.

    Raises
    ------
    MeshTopologyError
        If an edge has no unique owner, the traces are disconnected, or the
        two sides do not cover the same polyline.
    """
    if "traces" in mesh._cache:
        return mesh._cache["traces"]
    t0 = _build_trace(mesh, 0)
    t1 = _build_trace(mesh, 1)
    if t0.closed != t1.closed:
        raise MeshTopologyError("one interface side is closed and the other is open")
    tol = 1e-12 * max(mesh.diameter, 1.0) * 1e3
    if abs(t0.total_length - t1.total_length) > tol * max(t0.n_segments, t1.n_segments):
        raise MeshTopologyError(
            f"interface sides differ in length ({t0.total_length!r} vs {t1.total_length!r})")
    for a, b in ((t0, t1), (t1, t0)):
        d = _points_to_polyline(a.node_points, b.points)
        if d.max() > tol:
            raise MeshTopologyError(
                f"side-{a.side} interface vertex lies {d.max():.3e} off the side-{b.side} trace")
    mesh._cache["traces"] = (t0, t1)
    return t0, t1


def _project_to_segments(pts, seg):
    """Distances and parameters of points against every segment.

    Returns (dist, t), each (npts, nseg).
    """
    a = seg[:, 0][None]
    d = (seg[:, 1] - seg[:, 0])[None]
    p = pts[:, None]
    ll = (d ** 2).sum(-1)
    t = ((p - a) * d).sum(-1) / ll
    tc = np.clip(t, 0.0, 1.0)
    foot = a + tc[..., None] * d
    return np.linalg.norm(p - foot, axis=-1), t


def _points_to_polyline(pts, seg, chunk=512):
    out = np.empty(len(pts))
    for s in range(0, len(pts), chunk):
        dist, _ = _project_to_segments(pts[s:s + chunk], seg)
        out[s:s + chunk] = dist.min(axis=1)
    return out


@dataclass(frozen=True)
class MergedSegments:
    """Common refinement of two interface traces.

    Attributes
    ----------
    points : (k, 2, 2) ndarray
        Sub-segment endpoints, ordered along the side-0 trace.
    seg0, seg1 : (k,) ndarray
        Index of the side-0 and side-1 segment containing each sub-segment.
    breakpoints : (k+1,) ndarray
        Arc-length positions of the sub-segment ends along the side-0 trace.
    """

    points: np.ndarray
    seg0: np.ndarray
    seg1: np.ndarray
    breakpoints: np.ndarray

    def __len__(self):
        return len(self.seg0)


def merge_breakpoints(trace0, trace1):
    """Merge the vertices of two traces of the same polyline.

    Every side-1 vertex is projected to arc length along the side-0 trace.
    The union of both vertex sets, sorted and de-duplicated at
    ``1e-12 * length``, defines sub-segments that each lie inside exactly one
    segment of each side.

    Raises
    ------
    MeshTopologyError
        If the traces do not cover the same polyline.
    """
    L0 = trace0.total_length
    tol = 1e-12 * max(L0, 1e-300)
    geo_tol = 1e-9 * max(L0, 1e-300)
    len0 = trace0.lengths
    cum0 = np.concatenate([[0.0], np.cumsum(len0)])
    if abs(trace1.total_length - L0) > 1e-9 * L0:
        raise MeshTopologyError(
            f"trace lengths differ: {L0!r} vs {trace1.total_length!r}")
    pts1 = trace1.points[:, 0] if trace1.closed else trace1.node_points
    arcs = np.empty(len(pts1))
    for s in range(0, len(pts1), 512):
        dist, t = _project_to_segments(pts1[s:s + 512], trace0.points)
        j = dist.argmin(axis=1)
        dmin = dist[np.arange(len(j)), j]
        if dmin.max() > geo_tol:
            raise MeshTopologyError(
                f"side-1 vertex lies {dmin.max():.3e} off the side-0 trace")
        tj = np.clip(t[np.arange(len(j)), j], 0.0, 1.0)
        arcs[s:s + 512] = cum0[j] + tj * len0[j]
    if trace0.closed:
        arcs = np.mod(arcs, L0)
        arcs[np.abs(arcs - L0) <= tol] = 0.0
    allb = np.sort(np.concatenate([cum0, arcs]))
    keep = np.concatenate([[True], np.diff(allb) > tol])
    bp = allb[keep]
    if L0 - bp[-1] <= tol:
        bp[-1] = L0
    else:
        bp = np.append(bp, L0)
    mids = 0.5 * (bp[:-1] + bp[1:])
    s0 = np.clip(np.searchsorted(cum0, mids, side="right") - 1, 0, len(len0) - 1)

    def point_at(s, seg):
        t = (s - cum0[seg]) / len0[seg]
        p = trace0.points[seg]
        return p[:, 0] + t[:, None] * (p[:, 1] - p[:, 0])

    a = point_at(bp[:-1], s0)
    b = point_at(bp[1:], s0)
    m = 0.5 * (a + b)
    seg1 = np.empty(len(m), dtype=np.int64)
    for s in range(0, len(m), 512):
        dist, t = _project_to_segments(m[s:s + 512], trace1.points)
        inside = (dist <= geo_tol) & (t > -1e-12) & (t < 1 + 1e-12)
        cnt = inside.sum(axis=1)
        if np.any(cnt != 1):
            k = int(np.nonzero(cnt != 1)[0][0]) + s
            raise MeshTopologyError(
                f"interface point {tuple(m[k])} covered {int(cnt[k - s])} times by side 1")
        seg1[s:s + 512] = inside.argmax(axis=1)
    return MergedSegments(np.stack([a, b], axis=1), s0.astype(np.int64), seg1, bp)


# ---------------------------------------------------------------------------
# quality and invariants

@dataclass(frozen=True)
class QualityReport:
    """Shape-regularity measures.

    Attributes
    ----------
    sigma1 : float
        Maximum over triangles of longest edge over inradius.
    sigma2 : float
        Shortest over longest side-0 interface segment.
    min_angle : float
        Smallest interior angle in degrees.
    """

    sigma1: float
    sigma2: float
    min_angle: float


def mesh_quality(mesh):
    """Compute the :class:`QualityReport` of ``mesh``.

    Meshes without interface edges report ``sigma2 = 1``.
    """
    el = edge_lengths(mesh)
    area = np.abs(mesh.areas)
    rho = 2.0 * area / el.sum(axis=1)
    sigma1 = float((el.max(axis=1) / rho).max())
    a, b, c = el[:, 0], el[:, 1], el[:, 2]
    cosines = np.stack([
        (b ** 2 + c ** 2 - a ** 2) / (2 * b * c),
        (a ** 2 + c ** 2 - b ** 2) / (2 * a * c),
        (a ** 2 + b ** 2 - c ** 2) / (2 * a * b),
    ], axis=1)
    min_angle = float(np.degrees(np.arccos(np.clip(cosines, -1, 1))).min())
    e0 = mesh.edges_with(Marker.INTERFACE_SIDE0)
    if len(e0):
        ln = np.linalg.norm(mesh.vertices[e0[:, 1]] - mesh.vertices[e0[:, 0]], axis=1)
        sigma2 = float(ln.min() / ln.max())
    else:
        sigma2 = 1.0
    return QualityReport(sigma1, sigma2, min_angle)


def check_invariants(mesh):
    """Validate the structural invariants of a bi-domain mesh.

    Checks positive orientation, interface ownership, that both interface
    sides cover the same polyline, that every edge between triangles of
    different subdomains is an interface edge, and that every edge on the
    boundary of the triangulation is marked.

    Raises
    ------
    GeometryError
        For non-positive triangle areas.
    MeshTopologyError
        For any topological violation.
    """
    if np.any(mesh.areas <= 0):
        k = int(np.argmin(mesh.areas))
        raise GeometryError(f"triangle {k} has non-positive signed area {mesh.areas[k]!r}")
    extract_interface_traces(mesh)
    key, owner, _ = _edge_owners(mesh)
    nv = mesh.n_vertices
    code = key[:, 0] * nv + key[:, 1]
    uniq, inv, counts = np.unique(code, return_inverse=True, return_counts=True)
    if np.any(counts > 2):
        raise MeshTopologyError("an edge is shared by more than two triangles")
    be = np.sort(mesh.boundary_edges, axis=1)
    marked = set((be[:, 0] * nv + be[:, 1]).tolist())
    iface = mesh.boundary_markers >= Marker.INTERFACE_SIDE0
    iface_codes = set((be[iface, 0] * nv + be[iface, 1]).tolist())
    # edges shared across subdomains must be interface edges
    sub = mesh.subdomain[owner]
    first = np.full(len(uniq), -1)
    mixed = np.zeros(len(uniq), bool)
    for i in range(len(code)):
        u = inv[i]
        if first[u] < 0:
            first[u] = sub[i]
        elif first[u] != sub[i]:
            mixed[u] = True
    for c in uniq[mixed]:
        if int(c) not in iface_codes:
            raise MeshTopologyError(
                f"edge {divmod(int(c), nv)} separates subdomains but is not an interface edge")
    for c in uniq[counts == 1]:
        if int(c) not in marked:
            raise MeshTopologyError(f"boundary edge {divmod(int(c), nv)} carries no marker")
    return True


# ---------------------------------------------------------------------------
# generator building blocks

class _Builder:
    """Accumulates vertices (deduplicated on exact coordinates) and triangles."""

    def __init__(self):
        self.index = {}
        self.coords = []
        self.tris = []
        self.sub = []
        self.edges = []
        self.markers = []

    def add(self, x, y):
        key = (float(x), float(y))
        i = self.index.get(key)
        if i is None:
            i = len(self.coords)
            self.index[key] = i
            self.coords.append(key)
        return i

    def add_many(self, pts):
        return np.array([self.add(x, y) for x, y in pts], dtype=np.int64)

    def tri(self, a, b, c, sub):
        pa, pb, pc = self.coords[a], self.coords[b], self.coords[c]
        s = (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pb[1] - pa[1]) * (pc[0] - pa[0])
        if s < 0:
            b, c = c, b
        elif s == 0:
            raise GeometryError("generator produced a degenerate triangle")
        self.tris.append((a, b, c))
        self.sub.append(sub)

    def chain_edges(self, ids, marker, closed=False):
        ids = list(ids)
        pairs = list(zip(ids[:-1], ids[1:]))
        if closed:
            pairs.append((ids[-1], ids[0]))
        for a, b in pairs:
            self.edges.append((a, b))
            self.markers.append(int(marker))

    def build(self):
        return Mesh(np.array(self.coords, dtype=float), np.array(self.tris, dtype=np.int64),
                    np.array(self.sub, dtype=np.int8), np.array(self.edges, dtype=np.int64),
                    np.array(self.markers, dtype=np.int8))


def _zipper(b, ia, ta, ib, tb, sub):
    """Triangulate the band between two node chains.

    ``ia``/``ib`` are vertex ids and ``ta``/``tb`` nondecreasing parameters
    with equal first and last values.  The chain whose next parameter is
    smaller is advanced.
    """
    i = j = 0
    na, nb = len(ia) - 1, len(ib) - 1
    while i < na or j < nb:
        if j == nb or (i < na and ta[i + 1] <= tb[j + 1]):
            b.tri(ia[i], ia[i + 1], ib[j], sub)
            i += 1
        else:
            b.tri(ia[i], ib[j + 1], ib[j], sub)
            j += 1


def _grid(b, xs, ys, sub):
    """Structured grid split along the (i, j)-(i+1, j+1) diagonal.

    Returns the (ny, nx) array of vertex ids.
    """
    ids = np.array([[b.add(x, y) for x in xs] for y in ys], dtype=np.int64)
    for j in range(len(ys) - 1):
        for i in range(len(xs) - 1):
            v00, v10 = ids[j, i], ids[j, i + 1]
            v01, v11 = ids[j + 1, i], ids[j + 1, i + 1]
            b.tri(v00, v10, v11, sub)
            b.tri(v00, v11, v01, sub)
    return ids


def _rect_perimeter(rect, counts):
    """Counter-clockwise perimeter nodes of ``rect = (x0, x1, y0, y1)``.

    ``counts`` gives the node count per side (bottom, right, top, left),
    corners included.  Returns (points, parameter) where the parameter runs
    from 0 to 4 with corners at integers.
    """
    x0, x1, y0, y1 = rect
    corners = [(x0, y0), (x1, y0), (x1, y1), (x0, y1), (x0, y0)]
    pts, par = [], []
    for k in range(4):
        n = counts[k]
        s = np.linspace(0.0, 1.0, n)
        (ax, ay), (bx, by) = corners[k], corners[k + 1]
        # ascending linspace on every side reproduces the habitat grid bitwise
        xs = np.linspace(min(ax, bx), max(ax, bx), n)
        ys = np.linspace(min(ay, by), max(ay, by), n)
        if bx < ax:
            xs = xs[::-1]
        if by < ay:
            ys = ys[::-1]
        # exact corner values keep vertex dedup reliable
        xs[0], ys[0], xs[-1], ys[-1] = ax, ay, bx, by
        for t in range(n - 1):
            pts.append((xs[t], ys[t]))
            par.append(k + s[t])
    return pts, np.array(par)


def _graded_layers(h_in, h_cap, depth, grading):
    """Layer widths starting at ``h_in`` and growing by ``grading`` up to
    ``h_cap``, rescaled to sum to ``depth``."""
    widths = []
    w = h_in
    total = 0.0
    while total < depth:
        widths.append(w)
        total += w
        w = min(w * grading, h_cap)
    widths = np.array(widths)
    excess = total - depth
    if len(widths) > 1 and excess > 0.5 * widths[-1]:
        widths = widths[:-1]
    return widths * (depth / widths.sum())


def _check_counts(**counts):
    for name, n in counts.items():
        if int(n) != n or n < 2:
            raise ConfigError(f"{name} must be an integer >= 2 (got {n!r})")


def gen_rect_bidomain(outer, inner, n_inner_side, n_outer_side, grading=1.0,
                      conformity="conformal", outer_marker=Marker.OUTER_DIRICHLET):
    """Rectangular habitat inside a rectangular truncated domain.

    Parameters
    ----------
    outer, inner : tuple of float
        Rectangles as ``(xmin, xmax, ymin, ymax)``.
    n_inner_side : int
        Interface nodes per side seen from subdomain 1.  Subdomain 0 uses the
        same count (conformal) or one fewer (nonconformal).
    n_outer_side : int
        Nodes per side of the outer rectangle.
    grading : float
        Growth ratio of successive layer widths in subdomain 1, ``>= 1``.
    conformity : {"conformal", "nonconformal"}

    Returns
    -------
    Mesh
    """
    _check_counts(n_inner_side=n_inner_side, n_outer_side=n_outer_side)
    if grading < 1:
        raise ConfigError(f"grading must be >= 1 (got {grading!r})")
    if conformity not in ("conformal", "nonconformal"):
        raise ConfigError(f"unknown conformity {conformity!r}")
    X0, X1, Y0, Y1 = map(float, outer)
    x0, x1, y0, y1 = map(float, inner)
    if not (x1 > x0 and y1 > y0 and X1 > X0 and Y1 > Y0):
        raise GeometryError("rectangles must have positive extent")
    gaps = np.array([x0 - X0, X1 - x1, y0 - Y0, Y1 - y1])
    if np.any(gaps <= 0):
        raise GeometryError("inner rectangle must lie strictly inside the outer one")
    n1 = int(n_inner_side)
    n0 = n1 if conformity == "conformal" else n1 - 1
    if n0 < 2:
        raise ConfigError("nonconformal meshes need n_inner_side >= 3")
    b = _Builder()

    # subdomain 0: structured grid
    xs = np.linspace(x0, x1, n0)
    ys = np.linspace(y0, y1, n0)
    xs[-1], ys[-1] = x1, y1
    ids0 = _grid(b, xs, ys, 0)
    ring0 = np.concatenate([ids0[0, :-1], ids0[:-1, -1], ids0[-1, :0:-1], ids0[:0:-1, 0]])
    b.chain_edges(ring0, Marker.INTERFACE_SIDE0, closed=True)

    # subdomain 1: graded rings blending the inner and outer rectangles
    D = gaps.max()
    h_in = max((x1 - x0), (y1 - y0)) / (n1 - 1)
    h_out = max((X1 - X0), (Y1 - Y0)) / (n_outer_side - 1)
    widths = _graded_layers(h_in / D, max(h_out, h_in) / D, 1.0, grading)
    s = np.concatenate([[0.0], np.cumsum(widths)])
    s[-1] = 1.0
    inner_r = np.array([x0, x1, y0, y1])
    outer_r = np.array([X0, X1, Y0, Y1])
    prev = None
    for k, sk in enumerate(s):
        rect = inner_r if k == 0 else (outer_r if k == len(s) - 1 else
                                       (1 - sk) * inner_r + sk * outer_r)
        w_side = rect[1] - rect[0]
        h_side = rect[3] - rect[2]
        if k == 0:
            counts = [n1] * 4
        elif k == len(s) - 1:
            counts = [int(n_outer_side)] * 4
        else:
            ht = D * 0.5 * (widths[k - 1] + widths[min(k, len(widths) - 1)])
            cx = max(2, int(round(w_side / ht)) + 1)
            cy = max(2, int(round(h_side / ht)) + 1)
            counts = [cx, cy, cx, cy]
        pts, par = _rect_perimeter(rect, counts)
        ids = b.add_many(pts)
        if k == 0:
            b.chain_edges(ids, Marker.INTERFACE_SIDE1, closed=True)
        if k == len(s) - 1:
            b.chain_edges(ids, outer_marker, closed=True)
        if prev is not None:
            pid, ppar = prev
            _zipper(b, np.append(pid, pid[0]), np.append(ppar, 4.0),
                    np.append(ids, ids[0]), np.append(par, 4.0), 1)
        prev = (ids, par)
    return b.build()


def gen_disk_bidomain(r_inner, r_outer, n_gamma, n_outer, grading=1.1, center=(0.0, 0.0),
                      outer_marker=Marker.OUTER_DIRICHLET):
    """Polygonal disk habitat inside a circular truncated domain.

    The interface is the inscribed regular ``n_gamma``-gon of radius
    ``r_inner``.  Subdomain 0 is meshed by concentric rings closed with a
    central fan, subdomain 1 by graded rings out to the inscribed
    ``n_outer``-gon of radius ``r_outer``.  The mesh is conformal.
    """
    _check_counts(n_outer=n_outer)
    if int(n_gamma) != n_gamma or n_gamma < 8:
        raise ConfigError(f"n_gamma must be an integer >= 8 (got {n_gamma!r})")
    if n_outer < 3:
        raise ConfigError("n_outer must be >= 3")
    if not (0 < r_inner < r_outer):
        raise GeometryError("need 0 < r_inner < r_outer")
    if grading < 1:
        raise ConfigError(f"grading must be >= 1 (got {grading!r})")
    cx, cy = map(float, center)
    b = _Builder()
    h_in = 2 * np.pi * r_inner / n_gamma

    def ring(r, n):
        t = np.arange(n) / n
        ang = 2 * np.pi * t
        return b.add_many(zip(cx + r * np.cos(ang), cy + r * np.sin(ang))), t

    # subdomain 0: rings inward from the interface, uniform spacing
    n_r = max(1, int(round(r_inner / h_in)))
    radii0 = r_inner * np.arange(n_r + 1) / n_r
    c_id = b.add(cx, cy)
    rings0 = []
    for k in range(1, n_r + 1):
        n = int(n_gamma) if k == n_r else max(6, int(round(n_gamma * k / n_r)))
        rings0.append(ring(radii0[k], n))
    ids, t = rings0[0]
    for i in range(len(ids)):
        b.tri(c_id, ids[i], ids[(i + 1) % len(ids)], 0)
    for (ia, ta), (ib, tb) in zip(rings0[:-1], rings0[1:]):
        _zipper(b, np.append(ia, ia[0]), np.append(ta, 1.0),
                np.append(ib, ib[0]), np.append(tb, 1.0), 0)
    gam, tg = rings0[-1]
    b.chain_edges(gam, Marker.INTERFACE_SIDE0, closed=True)
    b.chain_edges(gam, Marker.INTERFACE_SIDE1, closed=True)

    # subdomain 1: graded annulus
    h_out = 2 * np.pi * r_outer / n_outer
    widths = _graded_layers(h_in, max(h_out, h_in), r_outer - r_inner, grading)
    radii1 = r_inner + np.concatenate([[0.0], np.cumsum(widths)])
    radii1[-1] = r_outer
    prev = (gam, tg)
    for k in range(1, len(radii1)):
        if k == len(radii1) - 1:
            n = int(n_outer)
        else:
            ht = 0.5 * (widths[k - 1] + widths[min(k, len(widths) - 1)])
            n = max(8, int(round(2 * np.pi * radii1[k] / ht)))
        cur = ring(radii1[k], n)
        (ia, ta), (ib, tb) = prev, cur
        _zipper(b, np.append(ia, ia[0]), np.append(ta, 1.0),
                np.append(ib, ib[0]), np.append(tb, 1.0), 1)
        prev = cur
    b.chain_edges(prev[0], outer_marker, closed=True)
    return b.build()


def geometric_widths(first, total, n_cells):
    """Widths ``first * q**k`` (k < n_cells) summing to ``total``.

    The ratio ``q >= 1`` is found by root bracketing; ``first`` is kept
    exactly unless uniform cells are already wider than ``first``.
    """
    if n_cells < 1:
        raise ConfigError("need at least one cell")
    if first * n_cells >= total:
        return np.full(n_cells, total / n_cells)

    def excess(q):
        return first * np.sum(q ** np.arange(n_cells)) - total

    hi = 2.0
    while excess(hi) < 0:
        hi *= 2.0
    q = brentq(excess, 1.0, hi, xtol=1e-15, rtol=1e-15)
    w = first * q ** np.arange(n_cells)
    return w * (total / w.sum())


def gen_strip_bidomain(L, L_far, y0, y1, n_gamma0, n_gamma1, nx0, nx1,
                       n_far=None, n_near=None, first_width=None):
    """Strip geometry with a vertical interface at ``x = 0``.

    Subdomain 0 is ``(0, L) x (y0, y1)`` on a uniform ``nx0`` by ``n_gamma0``
    grid; subdomain 1 is ``(-L_far, 0) x (y0, y1)`` with ``nx1`` node columns
    whose widths grow geometrically from the subdomain-0 spacing.  Column node
    counts fall from ``n_gamma1`` at the interface to ``n_far`` at
    ``x = -L_far``; neighbouring columns are joined by a zipper.
    ``first_width`` sets the width of the column next to the interface
    (default: the subdomain-0 spacing); a value of at least
    ``L_far / (nx1 - 1)`` gives uniform columns.

    Boundary markers: ``x = -L_far`` Dirichlet, ``x = L`` Robin, top and
    bottom Neumann.
    """
    _check_counts(n_gamma0=n_gamma0, n_gamma1=n_gamma1, nx0=nx0, nx1=nx1)
    if not (L > 0 and L_far > 0 and y1 > y0):
        raise GeometryError("strip needs L > 0, L_far > 0 and y1 > y0")
    n_far = int(n_gamma1 if n_far is None else n_far)
    n_near = int(n_gamma0 if n_near is None else n_near)
    if n_near != n_gamma0:
        raise ConfigError("the x = L side must carry n_gamma0 nodes")
    _check_counts(n_far=n_far)
    H = y1 - y0
    b = _Builder()
    xs0 = np.linspace(0.0, L, nx0)
    xs0[-1] = L
    ys0 = np.linspace(y0, y1, n_gamma0)
    ys0[0], ys0[-1] = y0, y1
    ids0 = _grid(b, xs0, ys0, 0)
    b.chain_edges(ids0[::-1, 0], Marker.INTERFACE_SIDE0)
    b.chain_edges(ids0[:, -1], Marker.OUTER_ROBIN)
    b.chain_edges(ids0[0, :], Marker.OUTER_NEUMANN)
    b.chain_edges(ids0[-1, :], Marker.OUTER_NEUMANN)

    h0 = L / (nx0 - 1) if first_width is None else float(first_width)
    if not h0 > 0:
        raise ConfigError("first_width must be positive")
    w = geometric_widths(h0, L_far, nx1 - 1)
    xs1 = -np.concatenate([[0.0], np.cumsum(w)])
    xs1[-1] = -L_far
    cols = []
    for k, x in enumerate(xs1):
        if k == 0:
            n = int(n_gamma1)
        elif k == len(xs1) - 1:
            n = n_far
        else:
            ht = 0.5 * (w[k - 1] + w[min(k, len(w) - 1)])
            n = int(np.clip(round(H / ht) + 1, min(n_far, n_gamma1), n_gamma1))
        t = np.linspace(0.0, 1.0, n)
        ys = np.linspace(y0, y1, n)
        ys[0], ys[-1] = y0, y1
        cols.append((b.add_many(zip(np.full(n, x), ys)), t))
    b.chain_edges(cols[0][0][::-1], Marker.INTERFACE_SIDE1)
    b.chain_edges(cols[-1][0], Marker.OUTER_DIRICHLET)
    for (ia, ta), (ib, tb) in zip(cols[:-1], cols[1:]):
        _zipper(b, ia, ta, ib, tb, 1)
    b.chain_edges([c[0][0] for c in cols], Marker.OUTER_NEUMANN)
    b.chain_edges([c[0][-1] for c in cols], Marker.OUTER_NEUMANN)
    return b.build()
