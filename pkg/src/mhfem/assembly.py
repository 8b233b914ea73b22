"""Quadrature and sparse assembly of the hybrid (saddle-point) operators.

Conventions
-----------
Row ``i`` of every matrix is the test function, column ``j`` the trial
function.  The bilinear form on each subdomain is::

    a(w, v) = int  D grad w . grad v + (c . grad v) w + (div c) w v + w v / tau

with the advective term on the test function.  Robin edges add
``-b int w v`` and the interface coupling is
``b_kappa(w, mu) = int_Gamma mu (w0 - kappa w1) ds``.
"""
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, GeometryError
from .fespace import p1_geometry
from .mesh import Marker, edge_subdomain, merge_breakpoints


@dataclass(frozen=True)
class QuadratureRule:
    """Reference quadrature rule.

    ``points`` holds barycentric coordinates ``(k, 3)`` for triangles (the
    reference triangle has area 1/2) or coordinates in ``[0, 1]`` for
    segments.
    """

    points: np.ndarray
    weights: np.ndarray
    degree: int
    dim: int


def _gauss01(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def triangle_rule(degree=5):
    """Quadrature on the reference triangle exact to ``degree``.

    Degree 5 returns the classical 7-point rule; higher degrees use a
    collapsed Gauss product rule.
    """
    if degree <= 5:
        s15 = np.sqrt(15.0)
        a = (6.0 - s15) / 21.0
        b = (6.0 + s15) / 21.0
        wa = (155.0 - s15) / 2400.0
        wb = (155.0 + s15) / 2400.0
        xy = np.array([[1 / 3, 1 / 3], [a, a], [1 - 2 * a, a], [a, 1 - 2 * a],
                       [b, b], [1 - 2 * b, b], [b, 1 - 2 * b]])
        w = np.array([9.0 / 80.0, wa, wa, wa, wb, wb, wb])
        deg = 5
    else:
        n = (degree + 3) // 2
        u, wu = _gauss01(n)
        U, V = np.meshgrid(u, u, indexing="ij")
        W = np.outer(wu, wu) * (1.0 - U)
        xy = np.stack([U.ravel(), (V * (1.0 - U)).ravel()], axis=1)
        w = W.ravel()
        deg = 2 * n - 2
    bary = np.column_stack([1.0 - xy[:, 0] - xy[:, 1], xy[:, 0], xy[:, 1]])
    return QuadratureRule(bary, w, deg, 2)


def segment_rule(degree=5):
    """Gauss-Legendre rule on ``[0, 1]`` exact to ``degree``."""
    n = max(1, (degree + 2) // 2)
    x, w = _gauss01(n)
    return QuadratureRule(x, w, 2 * n - 1, 1)


# ---------------------------------------------------------------------------
# coefficients

Tensor = Union[np.ndarray, Callable]


@dataclass
class CoefficientField:
    """Coefficients of the bilinear form at one time level.

    Parameters
    ----------
    diffusion : tuple of two (2, 2) arrays or callables
        Diffusion tensor per subdomain; a callable maps ``(x, y)`` arrays to
        an ``(n, 2, 2)`` array.
    velocity : (2,) array or callable
        Advection velocity entering ``(c . grad v) w``; a callable maps
        ``(x, y)`` to ``(n, 2)``.
    div_velocity : float
        Divergence of ``velocity`` (constant).
    mass : float
        Reaction-free mass factor, normally ``1 / tau``.
    robin_b : float, optional
        Coefficient ``b`` of the Robin condition on ``OUTER_ROBIN`` edges.
    t : float
        Time at which the coefficients were evaluated.
    """

    diffusion: tuple
    velocity: Tensor = field(default_factory=lambda: np.zeros(2))
    div_velocity: float = 0.0
    mass: float = 0.0
    robin_b: Optional[float] = None
    t: float = 0.0

    def tensor(self, sub, pts=None):
        d = self.diffusion[sub]
        if callable(d):
            return np.asarray(d(pts[:, 0], pts[:, 1]), dtype=float)
        d = np.asarray(d, dtype=float)
        if d.ndim == 0:
            d = d * np.eye(2)
        return d

    @property
    def constant_velocity(self):
        return not callable(self.velocity)

    def velocity_at(self, pts):
        if callable(self.velocity):
            return np.asarray(self.velocity(pts[:, 0], pts[:, 1]), dtype=float)
        return np.broadcast_to(np.asarray(self.velocity, dtype=float), (len(pts), 2))


def isotropic(d0, d1, velocity=(0.0, 0.0), mass=0.0, robin_b=None):
    """Constant-coefficient field with isotropic diffusion."""
    return CoefficientField((d0 * np.eye(2), d1 * np.eye(2)), np.asarray(velocity, float),
                            0.0, mass, robin_b)


# ---------------------------------------------------------------------------
# element matrices

def _single(tri):
    t = np.asarray(tri, dtype=float).reshape(1, 3, 2)
    area, grads = p1_geometry(t)
    if area[0] < 0:
        raise GeometryError("triangle is clockwise")
    return area, grads


def local_diffusion(tri, D):
    """P1 stiffness ``int grad phi_i . D grad phi_j`` for one triangle."""
    area, grads = _single(tri)
    D = np.asarray(D, dtype=float)
    if D.ndim == 0:
        D = D * np.eye(2)
    return _diffusion_batch(area, grads, D)[0]


def local_mass(tri, factor=1.0):
    """P1 mass ``factor * int phi_i phi_j`` for one triangle."""
    area, _ = _single(tri)
    return _mass_batch(area, factor)[0]


def local_advection(tri, c):
    """P1 advection ``int (c . grad phi_i) phi_j`` for one triangle.

    ``c`` is a constant 2-vector or a callable ``(x, y) -> (n, 2)``.
    """
    t = np.asarray(tri, dtype=float).reshape(1, 3, 2)
    area, grads = _single(tri)
    if callable(c):
        return _advection_quad(t, area, grads, c)[0]
    return _advection_batch(area, grads, np.asarray(c, dtype=float))[0]


_MASS_REF = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0


def _diffusion_batch(area, grads, D):
    if D.ndim == 2:
        DG = grads @ D  # D symmetric
    else:
        DG = np.einsum("kjb,kab->kja", grads, D)
    return area[:, None, None] * np.einsum("kia,kja->kij", grads, DG)


def _diffusion_quad(corners, area, grads, dfun):
    rule = triangle_rule(5)
    x = np.einsum("qi,kid->kqd", rule.points, corners)
    D = dfun(x.reshape(-1, 2)).reshape(len(area), len(rule.weights), 2, 2)
    Dm = np.einsum("q,kqab->kab", rule.weights * 2.0, D)
    return _diffusion_batch(area, grads, Dm)


def _mass_batch(area, factor):
    return (np.asarray(factor, dtype=float) * area)[..., None, None] * _MASS_REF


def _advection_batch(area, grads, c):
    row = (grads @ c) * (area / 3.0)[:, None]
    return np.repeat(row[:, :, None], 3, axis=2)


def _advection_quad(corners, area, grads, cfun):
    rule = triangle_rule(5)
    x = np.einsum("qi,kid->kqd", rule.points, corners)
    c = np.asarray(cfun(x[..., 0].ravel(), x[..., 1].ravel()), dtype=float)
    c = c.reshape(len(area), len(rule.weights), 2)
    cg = np.einsum("kia,kqa->kqi", grads, c)
    wq = 2.0 * area[:, None] * rule.weights[None]
    return np.einsum("kq,kqi,qj->kij", wq, cg, rule.points)


# ---------------------------------------------------------------------------
# global assembly

def _scatter(cells, blocks, n):
    rows = np.repeat(cells, 3, axis=1).ravel()
    cols = np.tile(cells, (1, 3)).ravel()
    return sp.coo_matrix((blocks.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def _space_blocks(space, coeffs, weight, include):
    area, grads = space.geometry()
    corners = space.corners()
    sub = space.subdomain
    K = np.zeros((len(area), 3, 3))
    if "diffusion" in include:
        d = coeffs.diffusion[sub]
        if callable(d):
            K += _diffusion_quad(corners, area, grads, lambda p: coeffs.tensor(sub, p))
        else:
            K += _diffusion_batch(area, grads, coeffs.tensor(sub))
    if "advection" in include:
        if coeffs.constant_velocity:
            c = np.asarray(coeffs.velocity, dtype=float)
            if np.any(c != 0):
                K += _advection_batch(area, grads, c)
        else:
            K += _advection_quad(corners, area, grads, coeffs.velocity)
    if "mass" in include:
        f = coeffs.mass + coeffs.div_velocity
        if f != 0:
            K += _mass_batch(area, f)
    return K * weight


def apply_dirichlet(A, dofs):
    """Zero the rows and columns of ``dofs`` and put 1 on their diagonal."""
    A = sp.csr_matrix(A)
    n = A.shape[0]
    keep = np.ones(n)
    keep[np.asarray(dofs, dtype=np.int64)] = 0.0
    Dk = sp.diags(keep)
    out = (Dk @ A @ Dk + sp.diags(1.0 - keep)).tocsr()
    out.sort_indices()
    return out


def edge_mass(mesh, edges, factor):
    """1D P1 mass ``factor * int phi_i phi_j`` on mesh edges.

    Returns vertex-indexed ``(rows, cols, vals)`` triplets.
    """
    p = mesh.vertices[edges]
    h = np.linalg.norm(p[:, 1] - p[:, 0], axis=1)
    loc = np.array([[2.0, 1.0], [1.0, 2.0]]) / 6.0
    vals = factor * h[:, None, None] * loc
    rows = np.repeat(edges, 2, axis=1).ravel()
    cols = np.tile(edges, (1, 2)).ravel()
    return rows, cols, vals.ravel()


def assemble_a(spaces, coeffs, kappa_weight=1.0,
               include=("diffusion", "advection", "mass"), dirichlet=True):
    """Assemble the primal operator on both subdomains.

    Parameters
    ----------
    spaces : ProblemSpaces
    coeffs : CoefficientField
    kappa_weight : float
        Factor applied to the subdomain-1 block (1 for ``a``, kappa for the
        weighted form).
    include : tuple of str
        Terms to assemble (any of "diffusion", "advection", "mass").
    dirichlet : bool
        Eliminate Dirichlet dofs symmetrically.

    Returns
    -------
    scipy.sparse.csr_matrix
        ``n_w x n_w`` block-diagonal operator.
    """
    mesh = spaces.mesh
    if spaces.space0.mesh is not mesh or spaces.space1.mesh is not mesh:
        raise ConfigError("spaces were built from a different mesh")
    n = spaces.n_w
    A = sp.csr_matrix((n, n))
    for space, weight in ((spaces.space0, 1.0), (spaces.space1, kappa_weight)):
        if space.n_dofs == 0:
            continue
        K = _space_blocks(space, coeffs, weight, include)
        A = A + _scatter(space.global_cells, K, n)
    if coeffs.robin_b is not None and coeffs.robin_b != 0:
        edges = mesh.edges_with(Marker.OUTER_ROBIN)
        if len(edges):
            sub = edge_subdomain(mesh, edges)
            for s, space, weight in ((0, spaces.space0, 1.0), (1, spaces.space1, kappa_weight)):
                e = edges[sub == s]
                if len(e) == 0:
                    continue
                r, c, v = edge_mass(mesh, e, -coeffs.robin_b * weight)
                A = A + sp.coo_matrix((v, (space.dof_of_vertex[r], space.dof_of_vertex[c])),
                                      shape=(n, n)).tocsr()
    A = sp.csr_matrix(A)
    if dirichlet:
        A = apply_dirichlet(A, spaces.dirichlet_dofs)
    A.sum_duplicates()
    A.sort_indices()
    return A


def assemble_mass(spaces, dirichlet=False):
    """Unweighted mass matrix over both subdomains."""
    coeffs = isotropic(1.0, 1.0, mass=1.0)
    return assemble_a(spaces, coeffs, include=("mass",), dirichlet=dirichlet)


def field_at_quadrature(space, values, rule=None):
    """Values of a P1 field at the quadrature points of every cell, (nc, nq)."""
    rule = rule or triangle_rule(5)
    v = space.local(values)
    return v[space.cells] @ rule.points.T


def quadrature_points(space, rule=None):
    rule = rule or triangle_rule(5)
    return np.einsum("qi,kid->kqd", rule.points, space.corners())


def assemble_load(spaces, w_prev, reaction, tau, kappa_weight=1.0, forcing=None,
                  dirichlet=True):
    """Load vector ``int (G(w_prev) + w_prev / tau + f) phi_i``.

    Parameters
    ----------
    spaces : ProblemSpaces
    w_prev : ndarray
        Global coefficient vector of the previous iterate.
    reaction : callable
        ``reaction(u, subdomain)`` evaluated pointwise at quadrature points;
        ``None`` omits the reaction.
    tau : float or None
        Time step; ``None`` omits the ``w_prev / tau`` term.
    kappa_weight : float
        Factor applied on subdomain 1.
    forcing : tuple of callables, optional
        Extra source ``f_i(x, y)`` per subdomain.
    """
    rule = triangle_rule(5)
    out = np.zeros(spaces.n_w)
    for space, weight in ((spaces.space0, 1.0), (spaces.space1, kappa_weight)):
        if space.n_dofs == 0:
            continue
        area, _ = space.geometry()
        u = field_at_quadrature(space, w_prev, rule)
        g = np.zeros_like(u)
        if reaction is not None:
            g += reaction(u, space.subdomain)
        if tau is not None:
            g += u / tau
        if forcing is not None and forcing[space.subdomain] is not None:
            x = quadrature_points(space, rule)
            g += np.asarray(forcing[space.subdomain](x[..., 0], x[..., 1]), dtype=float)
        wq = 2.0 * area[:, None] * rule.weights[None] * weight
        loc = np.einsum("kq,kq,qi->ki", wq, g, rule.points)
        np.add.at(out, space.global_cells.ravel(), loc.ravel())
    if dirichlet:
        out[spaces.dirichlet_dofs] = 0.0
    return out


def assemble_coupling(spaces, kappa, merged=None, dirichlet=True):
    """Interface coupling ``int_Gamma mu_m (phi_j^0 - kappa phi_j^1) ds``.

    Integrated on the common refinement of the two traces with the 3-point
    Gauss rule, which is exact for the piecewise quadratic integrands.

    Returns
    -------
    scipy.sparse.csr_matrix
        ``n_lambda x n_w`` matrix.
    """
    t0, t1 = spaces.trace0, spaces.trace1
    mult = spaces.mult
    if merged is None:
        merged = merge_breakpoints(t0, t1)
    rule = segment_rule(5)
    a = merged.points[:, 0]
    b = merged.points[:, 1]
    ln = np.linalg.norm(b - a, axis=1)
    x = a[:, None] + rule.points[None, :, None] * (b - a)[:, None]  # (k, q, 2)

    def param(trace, seg):
        p = trace.points[seg]
        d = p[:, 1] - p[:, 0]
        return np.einsum("kqd,kd->kq", x - p[:, None, 0], d) / (d ** 2).sum(axis=1)[:, None]

    s0 = param(t0, merged.seg0)
    s1 = param(t1, merged.seg1)
    mu = np.stack([1 - s0, s0], axis=2)
    phi0 = mu
    phi1 = np.stack([1 - s1, s1], axis=2)
    wq = ln[:, None] * rule.weights[None]
    block0 = np.einsum("kq,kqm,kqj->kmj", wq, mu, phi0)
    block1 = -kappa * np.einsum("kq,kqm,kqj->kmj", wq, mu, phi1)
    mrow = mult.seg_dofs[merged.seg0]
    col0 = spaces.space0.dof_of_vertex[t0.vertex_ids[merged.seg0]]
    col1 = spaces.space1.dof_of_vertex[t1.vertex_ids[merged.seg1]]
    rows = np.concatenate([np.repeat(mrow, 2, axis=1).ravel(), np.repeat(mrow, 2, axis=1).ravel()])
    cols = np.concatenate([np.tile(col0, (1, 2)).ravel(), np.tile(col1, (1, 2)).ravel()])
    vals = np.concatenate([block0.ravel(), block1.ravel()])
    B = sp.coo_matrix((vals, (rows, cols)), shape=(mult.n_dofs, spaces.n_w)).tocsr()
    if dirichlet and len(spaces.dirichlet_dofs):
        keep = np.ones(spaces.n_w)
        keep[spaces.dirichlet_dofs] = 0.0
        B = (B @ sp.diags(keep)).tocsr()
    B.sum_duplicates()
    B.sort_indices()
    return B
