"""One-dimensional finite-difference solver for the strip cross-section.

Solves, to a steady state in pseudo-time,::

    w_t = d0 w'' + c w' + w (r - a w)     0 < x < L
    w_t = d1 w'' + c w' - m w            -L' < x < 0
    w(0+) = kappa w(0-)
    d0 w'(0+) + c w(0+) = d1 w'(0-) + c w(0-)
    d0 w'(L) + c w(L) = b w(L),           w(-L') = 0

on a grid that is uniform on ``(0, L)`` and geometrically graded on
``(-L', 0)``.  The node at ``x = 0`` is doubled.  Interior equations use
second-order central differences, the interface and Robin rows one-sided
second-order differences.  The linear operator is banded and factorized
once; reaction terms are explicit.
"""
from dataclasses import dataclass
import math

import numpy as np

from . import _kernels
from .errors import ConfigError, DivergenceError, GeometryError
from .model import kappa as kappa_of

KL, KU = 3, 2


@dataclass(frozen=True)
class Grid1D:
    """Nodes of the 1D grid.

    Attributes
    ----------
    left : ndarray
        Nodes on ``[-L', 0]`` in increasing order (last is 0).
    right : ndarray
        Nodes on ``[0, L]`` (first is 0).
    h0 : float
        Uniform spacing on ``(0, L)``.
    rc : float
        Common ratio of cell widths on ``(-L', 0)`` (before rescaling).
    """

    left: np.ndarray
    right: np.ndarray
    h0: float
    rc: float

    @property
    def nodes(self):
        """All node coordinates, with 0 listed twice."""
        return np.concatenate([self.left, self.right])

    @property
    def interface_index(self):
        """Index of the left copy of ``x = 0`` in :attr:`nodes`."""
        return len(self.left) - 1

    @property
    def n(self):
        return len(self.left) + len(self.right)


def make_grid(L, L_far, h0, rc=1.005):
    """Uniform spacing ``h0`` on ``(0, L)``; widths ``h0 rc^k`` away from 0 on
    ``(-L', 0)``, rescaled to end exactly at ``-L'``."""
    if not (L > 0 and L_far > 0 and h0 > 0):
        raise ConfigError("grid needs positive L, L' and h0")
    if rc < 1:
        raise ConfigError("rc must be >= 1")
    n_right = max(2, int(round(L / h0)))
    right = np.linspace(0.0, L, n_right + 1)
    widths = []
    total = 0.0
    w = h0
    while total < L_far:
        widths.append(w)
        total += w
        w *= rc
    widths = np.array(widths)
    if len(widths) > 2 and total - L_far > 0.5 * widths[-1]:
        widths = widths[:-1]
    widths *= L_far / widths.sum()
    left = -np.concatenate([[0.0], np.cumsum(widths)])[::-1]
    left[0] = -L_far
    left[-1] = 0.0
    return Grid1D(left, right, float(L / n_right), float(rc))


@dataclass(frozen=True)
class Profile1D:
    """Steady profile; ``left`` holds ``w1`` on ``[-L', 0]`` and ``right``
    holds ``w0`` on ``[0, L]``."""

    grid: Grid1D
    left: np.ndarray
    right: np.ndarray
    converged: bool
    steps: int
    metric: float

    @property
    def x(self):
        return self.grid.nodes

    @property
    def values(self):
        return np.concatenate([self.left, self.right])

    @property
    def jump_ratio(self):
        return self.right[0] / self.left[-1]


def _fd_weights(xs, x0, order):
    """Finite-difference weights for the ``order``-th derivative at ``x0``
    from the nodes ``xs`` (exact for polynomials of degree len(xs) - 1)."""
    xs = np.asarray(xs, dtype=float) - x0
    n = len(xs)
    V = np.vander(xs, n, increasing=True).T
    rhs = np.zeros(n)
    rhs[order] = math.factorial(order)
    return np.linalg.solve(V, rhs)


def build_operator(params, grid, tau, robin_b):
    """Banded pseudo-time operator and per-row data.

    Returns
    -------
    ab : ndarray
        LAPACK band storage with ``KL`` spare rows.
    dyn, r_node, a_node : ndarray
        Row flags (1 for dynamic rows) and explicit reaction coefficients.
    """
    p = params
    c = p.c[0]
    kap = kappa_of(p)
    left, right = grid.left, grid.right
    nl, nr = len(left), len(right)
    n = nl + nr
    ab = np.zeros((2 * KL + KU + 1, n), order="F")

    def put(i, j, v):
        ab[KL + KU + i - j, j] += v

    dyn = np.zeros(n)
    r_node = np.zeros(n)
    a_node = np.zeros(n)
    inv_tau = 1.0 / tau
    # Dirichlet at -L'
    put(0, 0, 1.0)
    for side, xs, off, d in ((1, left, 0, p.d1), (0, right, nl, p.d0)):
        for k in range(1, len(xs) - 1):
            i = off + k
            hm = xs[k] - xs[k - 1]
            hp = xs[k + 1] - xs[k]
            d2 = np.array([2.0 / (hm * (hm + hp)), -2.0 / (hm * hp), 2.0 / (hp * (hm + hp))])
            d1 = np.array([-hp / (hm * (hm + hp)), (hp - hm) / (hm * hp), hm / (hp * (hm + hp))])
            coef = -d * d2 - c * d1
            coef[1] += inv_tau
            for j, v in zip((i - 1, i, i + 1), coef):
                put(i, j, v)
            dyn[i] = 1.0
            if side == 0:
                r_node[i] = p.r
                a_node[i] = p.a
            else:
                r_node[i] = -p.m
    # jump row: w(0+) - kappa w(0-) = 0
    i = nl - 1
    put(i, nl - 1, -kap)
    put(i, nl, 1.0)
    # flux row: d0 w'(0+) + c w(0+) - d1 w'(0-) - c w(0-) = 0
    i = nl
    wr = _fd_weights(right[:3], 0.0, 1)
    wl = _fd_weights(left[-3:], 0.0, 1)
    for k in range(3):
        put(i, nl + k, p.d0 * wr[k])
        put(i, nl - 3 + k, -p.d1 * wl[k])
    put(i, nl, c)
    put(i, nl - 1, -c)
    # Robin row at x = L
    i = n - 1
    wb = _fd_weights(right[-3:], right[-1], 1)
    for k in range(3):
        put(i, n - 3 + k, p.d0 * wb[k])
    put(i, n - 1, c - robin_b)
    return ab, dyn, r_node, a_node


def solve_1d_steady(params, L, L_far, grid=None, tau=0.025, tol=1e-3, max_steps=2_000_000,
                    h0=None, rc=1.005, w0=None):
    """March the 1D problem to a steady state.

    Parameters
    ----------
    params : ModelParams
        Must carry ``robin_b``.
    L, L_far : float
        Habitat length and truncation distance.
    grid : Grid1D, optional
        Built from ``h0`` and ``rc`` when omitted.
    tau : float
        Pseudo-time step.
    tol : float
        Stop when ``max|w_new - w| / tau < tol``.

    Returns
    -------
    Profile1D

    Raises
    ------
    DivergenceError
        If the iterate becomes non-finite.
    """
    if params.robin_b is None:
        raise ConfigError("robin_b is required for the strip cross-section")
    if grid is None:
        if h0 is None:
            raise ConfigError("give either grid or h0")
        grid = make_grid(L, L_far, h0, rc)
    ab, dyn, r_node, a_node = build_operator(params, grid, tau, params.robin_b)
    nl = len(grid.left)
    if w0 is None:
        w0 = np.zeros(grid.n)
        w0[nl:] = params.r / params.a
    w, steps, metric, status = _kernels.fd_march(ab, KL, KU, dyn, r_node, a_node,
                                                 np.asarray(w0, dtype=float), float(tau),
                                                 float(tol), int(max_steps))
    if status == 2:
        raise DivergenceError(f"1D march diverged at step {steps}", step=steps)
    if status == 3:
        raise DivergenceError("1D operator is singular", step=0)
    return Profile1D(grid, w[:nl].copy(), w[nl:].copy(), status == 0, int(steps), float(metric))


def resample(profile, xs, side=0):
    """Piecewise-linear interpolation of ``profile`` at ``xs``.

    Points at ``x = 0`` take the value of subdomain ``side``.
    """
    xs = np.asarray(xs, dtype=float)
    g = profile.grid
    lo, hi = g.left[0], g.right[-1]
    span = hi - lo
    if np.any(xs < lo - 1e-12 * span) or np.any(xs > hi + 1e-12 * span):
        raise GeometryError(f"resample points must lie in [{lo}, {hi}]")
    out = np.empty_like(xs)
    on_right = (xs > 0) | ((xs == 0) & (side == 0))
    out[on_right] = np.interp(xs[on_right], g.right, profile.right)
    out[~on_right] = np.interp(xs[~on_right], g.left, profile.left)
    return out


def write_csv(profile, path):
    """Write columns ``x, w`` (``x = 0`` appears twice)."""
    import csv
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["x", "w"])
        for x, v in zip(profile.x, profile.values):
            wr.writerow([repr(float(x)), repr(float(v))])
