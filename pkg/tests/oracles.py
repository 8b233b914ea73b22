"""Independent reference computations shared by the tests.

Nothing here calls the package's assembly code: element matrices are built
from the affine map of each triangle with plain NumPy.
"""
import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from mhfem.mesh import Marker

_REF_GRAD = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])


def conforming_p1_step(mesh, d, tau, u0):
    """Solve ``(K + M / tau) u = M u0 / tau`` with one dof per mesh vertex.

    Homogeneous Dirichlet values on ``OUTER_DIRICHLET`` vertices; all other
    boundaries natural.  ``u0`` is indexed by mesh vertex.
    """
    nv = mesh.n_vertices
    rows, cols, kv, mv = [], [], [], []
    for tri in mesh.triangles:
        p = mesh.vertices[tri]
        J = np.column_stack([p[1] - p[0], p[2] - p[0]])
        area = 0.5 * abs(np.linalg.det(J))
        G = _REF_GRAD @ np.linalg.inv(J)
        K = d * area * (G @ G.T)
        M = area / 12.0 * (np.ones((3, 3)) + np.eye(3))
        for a in range(3):
            for b in range(3):
                rows.append(tri[a])
                cols.append(tri[b])
                kv.append(K[a, b])
                mv.append(M[a, b])
    K = sp.csr_matrix((kv, (rows, cols)), shape=(nv, nv))
    M = sp.csr_matrix((mv, (rows, cols)), shape=(nv, nv))
    A = (K + M / tau).tolil()
    rhs = M @ u0 / tau
    for v in mesh.vertices_with(Marker.OUTER_DIRICHLET):
        A.rows[v] = [v]
        A.data[v] = [1.0]
        rhs[v] = 0.0
    return spla.spsolve(A.tocsc(), rhs)
