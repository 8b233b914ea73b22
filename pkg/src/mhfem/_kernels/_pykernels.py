"""NumPy fallbacks for the compiled kernels in ``_ckernels.pyx``.

Signatures and results match the compiled versions exactly; the test suite
checks the two against each other.
"""
import numpy as np
from scipy.linalg import lapack


def locate_points(points, origin, inv_cell, nbx, nby, bucket_ptr, bucket_tris,
                  tri_p0, tri_inv, tol):
    """Find the containing triangle of each point.

    Parameters
    ----------
    points : (n, 2) float array
    origin : (2,) float array
        Lower-left corner of the bucket grid.
    inv_cell : (2,) float array
        Reciprocal bucket sizes.
    nbx, nby : int
        Bucket grid dimensions.
    bucket_ptr, bucket_tris : int64 arrays
        CSR map from bucket ``ix + nbx*iy`` to candidate triangles.
    tri_p0 : (m, 2) float array
        First vertex of every triangle.
    tri_inv : (m, 2, 2) float array
        Inverse of the affine map from the reference triangle.
    tol : float
        Barycentric slack; a point is inside when all coordinates are
        ``>= -tol``.

    Returns
    -------
    tri : (n,) int64 array
        Triangle index, or -1 when no candidate contains the point.
    bary : (n, 3) float array
        Barycentric coordinates in the chosen triangle (zeros when not found).
    """
    points = np.ascontiguousarray(points, dtype=float)
    n = len(points)
    tri = np.full(n, -1, dtype=np.int64)
    bary = np.zeros((n, 3))
    if n == 0:
        return tri, bary
    fx = (points[:, 0] - origin[0]) * inv_cell[0]
    fy = (points[:, 1] - origin[1]) * inv_cell[1]
    ix = np.floor(fx).astype(np.int64)
    iy = np.floor(fy).astype(np.int64)
    # points on the far bbox edge belong to the last bucket
    ix = np.where(ix == nbx, nbx - 1, ix)
    iy = np.where(iy == nby, nby - 1, iy)
    ok = (ix >= 0) & (ix < nbx) & (iy >= 0) & (iy < nby)
    idx = np.nonzero(ok)[0]
    if len(idx) == 0:
        return tri, bary
    b = ix[idx] + nbx * iy[idx]
    start = bucket_ptr[b]
    count = bucket_ptr[b + 1] - start
    has = count > 0
    idx, start, count = idx[has], start[has], count[has]
    if len(idx) == 0:
        return tri, bary
    owner = np.repeat(np.arange(len(idx)), count)
    offs = np.arange(owner.size) - np.repeat(np.cumsum(count) - count, count)
    cand = bucket_tris[np.repeat(start, count) + offs]
    d = points[idx[owner]] - tri_p0[cand]
    l1 = tri_inv[cand, 0, 0] * d[:, 0] + tri_inv[cand, 0, 1] * d[:, 1]
    l2 = tri_inv[cand, 1, 0] * d[:, 0] + tri_inv[cand, 1, 1] * d[:, 1]
    l0 = 1.0 - l1 - l2
    score = np.minimum(np.minimum(l0, l1), l2)
    seg_start = np.cumsum(count) - count
    best = np.maximum.reduceat(score, seg_start)
    # first candidate attaining the best score, per point
    hit = score == np.repeat(best, count)
    pos = np.where(hit, np.arange(owner.size), owner.size)
    first = np.minimum.reduceat(pos, seg_start)
    found = best >= -tol
    sel = first[found]
    pts = idx[found]
    tri[pts] = cand[sel]
    bary[pts, 0] = l0[sel]
    bary[pts, 1] = l1[sel]
    bary[pts, 2] = l2[sel]
    return tri, bary


def fd_march(ab, kl, ku, dyn, r_node, a_node, w0, tau, tol, max_steps):
    """Pseudo-time IMEX Euler march to a steady state for a banded operator.

    Each step solves ``M w_new = dyn * (w/tau + w*(r - a*w))`` where ``M`` is
    the banded matrix in ``ab`` (LAPACK general band storage with ``kl``
    spare rows on top). Rows with ``dyn == 0`` are algebraic constraints.

    Returns
    -------
    w : ndarray
        Final iterate.
    steps : int
        Number of steps taken.
    metric : float
        Last ``max|w_new - w| / tau``.
    status : int
        0 converged, 1 step cap reached, 2 non-finite iterate,
        3 singular matrix.
    """
    lu, ipiv, info = lapack.dgbtrf(np.asfortranarray(ab, dtype=float), kl, ku)
    w = np.array(w0, dtype=float)
    if info != 0:
        return w, 0, np.inf, 3
    inv_tau = 1.0 / tau
    metric = np.inf
    steps = 0
    while steps < max_steps:
        rhs = dyn * (w * inv_tau + w * (r_node - a_node * w))
        w_new, info = lapack.dgbtrs(lu, kl, ku, rhs, ipiv)
        steps += 1
        metric = float(np.max(np.abs(w_new - w))) * inv_tau
        w = w_new
        if not np.isfinite(metric):
            return w, steps, metric, 2
        if metric < tol:
            return w, steps, metric, 0
    return w, steps, metric, 1
