"""Manufactured piecewise solutions on the strip with a vertical interface.

The exact pair depends on ``x`` only::

    w1(x) = (1 + x / L') (1 + a1 x) exp(x / 2)          on (-L', 0)
    w0(x) = (A0 + B0 x + C0 x^2) exp(-x / 3)            on (0, L)

``A0`` enforces the density jump and ``B0`` the flux condition at ``x = 0``;
the Robin coefficient at ``x = L`` is read off the exact field.  The forcing
is what remains after substituting the pair into the stationary IMEX
operator ``w / tau - d w'' - c1 w'``.
"""
from dataclasses import dataclass
import math

import numpy as np
import sympy

from ..errors import ConfigError
from ..model import ModelParams


@dataclass(frozen=True)
class ManufacturedCase:
    """Exact fields, gradients and forcing for one parameter set.

    All callables take ``(x, y)`` arrays.  ``exact``, ``grad`` and ``forcing``
    are indexed by subdomain.
    """

    params: ModelParams
    kappa: float
    tau: float
    L: float
    L_far: float
    robin_b: float
    exact: tuple
    grad: tuple
    forcing: tuple
    symbols: dict

    def interface_residuals(self):
        """``(jump, flux)`` residuals of the exact pair at ``x = 0``."""
        x = self.symbols["x"]
        w0, w1 = self.symbols["w0"], self.symbols["w1"]
        p = self.params
        c = p.c[0]
        jump = (w0 - self.kappa * w1).subs(x, 0)
        flux = (p.d0 * sympy.diff(w0, x) + c * w0 - p.d1 * sympy.diff(w1, x) - c * w1).subs(x, 0)
        return float(jump), float(flux)


def _lift(expr, x):
    f = sympy.lambdify(x, expr, "numpy")

    def field(xx, yy):
        xx = np.asarray(xx, dtype=float)
        return np.broadcast_to(np.asarray(f(xx), dtype=float), np.broadcast(xx, yy).shape).copy()

    return field


def _lift_grad(expr, x):
    f = sympy.lambdify(x, sympy.diff(expr, x), "numpy")

    def grad(xx, yy):
        xx = np.asarray(xx, dtype=float)
        shape = np.broadcast(xx, yy).shape
        gx = np.broadcast_to(np.asarray(f(xx), dtype=float), shape).copy()
        return gx, np.zeros(shape)

    return grad


def manufactured_case(kappa, d0, d1, c, L=1.0, L_far=1.0, tau=1.0, a1=0.5, c0=-0.3):
    """Build the manufactured case.

    Parameters
    ----------
    kappa : float
        Density jump ``w0 = kappa w1`` at ``x = 0``.
    d0, d1 : float
        Diffusion rates.
    c : sequence of float
        Shift velocity; the second component must vanish.
    L, L_far : float
        Extent of the strip on either side of the interface.
    tau : float
        Time step of the stationary IMEX operator (a single step from
        ``w = 0`` with this forcing reproduces the exact pair).
    a1, c0 : float
        Shape coefficients of the two pieces.

    Returns
    -------
    ManufacturedCase
    """
    c = tuple(float(v) for v in c)
    if len(c) != 2 or c[1] != 0.0:
        raise ConfigError("the manufactured strip case needs c = (c1, 0)")
    if not (kappa > 0 and d0 > 0 and d1 > 0 and tau > 0):
        raise ConfigError("kappa, d0, d1 and tau must be positive")
    x = sympy.Symbol("x", real=True)
    c1 = sympy.nsimplify(c[0])
    k, D0, D1 = sympy.Float(kappa, 30), sympy.Float(d0, 30), sympy.Float(d1, 30)
    w1 = (1 + x / sympy.Float(L_far, 30)) * (1 + sympy.Float(a1, 30) * x) * sympy.exp(x / 2)
    A0, B0 = sympy.symbols("A0 B0")
    w0 = (A0 + B0 * x + sympy.Float(c0, 30) * x ** 2) * sympy.exp(-x / 3)
    eqs = [
        (w0 - k * w1).subs(x, 0),
        (D0 * sympy.diff(w0, x) + c1 * w0 - D1 * sympy.diff(w1, x) - c1 * w1).subs(x, 0),
    ]
    sol = sympy.solve(eqs, [A0, B0], dict=True)[0]
    w0 = w0.subs(sol)
    wL = float(w0.subs(x, L))
    if abs(wL) < 1e-8:
        raise ConfigError("exact field vanishes at x = L; pick other shape coefficients")
    b = float((D0 * sympy.diff(w0, x) + c1 * w0).subs(x, L)) / wL
    inv_tau = 1 / sympy.Float(tau, 30)
    f0 = sympy.simplify(w0 * inv_tau - D0 * sympy.diff(w0, x, 2) - c1 * sympy.diff(w0, x))
    f1 = sympy.simplify(w1 * inv_tau - D1 * sympy.diff(w1, x, 2) - c1 * sympy.diff(w1, x))
    # alpha reproducing kappa for the given diffusion ratio
    s = kappa / math.sqrt(d1 / d0)
    params = ModelParams(d0=d0, d1=d1, r=0.0, a=1.0, m=0.0, alpha=s / (1.0 + s), c=c,
                         robin_b=b)
    return ManufacturedCase(
        params=params, kappa=float(kappa), tau=float(tau), L=float(L), L_far=float(L_far),
        robin_b=b,
        exact=(_lift(w0, x), _lift(w1, x)),
        grad=(_lift_grad(w0, x), _lift_grad(w1, x)),
        forcing=(_lift(f0, x), _lift(f1, x)),
        symbols={"x": x, "w0": w0, "w1": w1, "f0": f0, "f1": f1},
    )
