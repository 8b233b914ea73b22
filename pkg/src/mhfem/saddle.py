"""Monolithic sparse direct solve of the hybrid saddle-point system.

The system is::

    [ A    B1^T ] [ w      ]   [ g ]
    [ Bk   0    ] [ lambda ] = [ 0 ]

with ``B1`` the unweighted coupling and ``Bk`` the kappa-weighted one, so
the matrix is nonsymmetric whenever kappa != 1.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.io
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConfigError, SolveError

RESIDUAL_TOL = 1e-10


@dataclass
class BlockSaddleSystem:
    """Blocks of the hybrid system.

    Attributes
    ----------
    A : sparse (n_w, n_w)
    B1, Bk : sparse (n_lambda, n_w)
    rhs_w : (n_w,) ndarray
    """

    A: sp.spmatrix
    B1: sp.spmatrix
    Bk: sp.spmatrix
    rhs_w: np.ndarray = None
    _matrix: object = field(default=None, repr=False)

    def __post_init__(self):
        n_w = self.A.shape[0]
        if self.A.shape != (n_w, n_w):
            raise ConfigError("A must be square")
        if self.B1.shape != self.Bk.shape or self.B1.shape[1] != n_w:
            raise ConfigError(f"coupling blocks {self.B1.shape}/{self.Bk.shape} do not fit "
                              f"A of size {n_w}")
        if self.rhs_w is None:
            self.rhs_w = np.zeros(n_w)
        self.rhs_w = np.asarray(self.rhs_w, dtype=float)
        if self.rhs_w.shape != (n_w,):
            raise ConfigError("rhs_w has the wrong length")

    @property
    def n_w(self):
        return self.A.shape[0]

    @property
    def n_lambda(self):
        return self.B1.shape[0]

    @property
    def rhs_lambda(self):
        return np.zeros(self.n_lambda)

    def matrix(self):
        """The assembled ``(n_w + n_lambda)`` square block matrix (CSC)."""
        if self._matrix is None:
            self._matrix = sp.bmat([[self.A, self.B1.T], [self.Bk, None]], format="csc")
        return self._matrix

    def with_rhs(self, rhs_w):
        """Same operator, new right-hand side (shares the cached matrix)."""
        return BlockSaddleSystem(self.A, self.B1, self.Bk, rhs_w, self._matrix)

    def dump(self, path):
        """Write the block matrix in Matrix Market coordinate format."""
        scipy.io.mmwrite(path, self.matrix())


def residuals(system, w, lam):
    """Max-norm residuals ``(|A w + B1^T lam - g|, |Bk w|)``."""
    r1 = system.A @ w + system.B1.T @ lam - system.rhs_w
    r2 = system.Bk @ w
    return float(np.max(np.abs(r1), initial=0.0)), float(np.max(np.abs(r2), initial=0.0))


class SaddleSolver:
    """LU factorization of a saddle operator, reusable across right-hand sides.

    Parameters
    ----------
    system : BlockSaddleSystem
        Operator to factorize; its right-hand side is ignored.
    check : bool
        Verify the residual bounds after every solve.
    """

    def __init__(self, system, check=True):
        self.system = system
        self.check = check
        K = system.matrix()
        self._absK = abs(K)
        try:
            self.lu = spla.splu(K, permc_spec="COLAMD")
        except RuntimeError as exc:
            raise SolveError(f"factorization failed: {exc}") from exc
        diag = np.abs(self.lu.U.diagonal())
        bad = np.nonzero(~np.isfinite(diag) | (diag <= 1e-14 * max(diag.max(), 1e-300)))[0]
        if len(bad):
            raise SolveError(f"singular factorization (pivot {int(bad[0])})",
                             pivot=int(bad[0]))

    def solve(self, rhs_w):
        """Return ``(w, lam)`` for the load ``rhs_w``."""
        n_w = self.system.n_w
        rhs = np.concatenate([np.asarray(rhs_w, dtype=float), np.zeros(self.system.n_lambda)])
        x = self.lu.solve(rhs)
        if not np.all(np.isfinite(x)):
            raise SolveError("solve produced non-finite values")
        K = self.system.matrix()
        r = rhs - K @ x
        scale = np.abs(rhs) + self._absK @ np.abs(x)
        rel = self._rel(r, scale)
        if rel > RESIDUAL_TOL * 1e-3:
            # one step of iterative refinement
            x = x + self.lu.solve(r)
            r = rhs - K @ x
            rel = self._rel(r, scale)
        w, lam = x[:n_w], x[n_w:]
        if self.check:
            if rel > RESIDUAL_TOL:
                raise SolveError(f"relative residual {rel:.3e} exceeds {RESIDUAL_TOL:g}")
            cons = float(np.max(np.abs(r[n_w:]), initial=0.0))
            wmax = float(np.max(np.abs(w), initial=0.0))
            if cons > RESIDUAL_TOL * wmax and cons > 1e-300:
                raise SolveError(f"constraint residual {cons:.3e} exceeds "
                                 f"{RESIDUAL_TOL:g} * |w| = {RESIDUAL_TOL * wmax:.3e}")
        return w, lam

    @staticmethod
    def _rel(r, scale):
        s = float(np.max(scale, initial=0.0))
        if s == 0.0:
            return 0.0
        return float(np.max(np.abs(r)) / s)


def solve(system, check=True):
    """Factorize and solve ``system``; returns ``(w, lam)``.

    Raises
    ------
    SolveError
        On a singular factorization or a residual above tolerance.
    """
    return SaddleSolver(system, check=check).solve(system.rhs_w)
