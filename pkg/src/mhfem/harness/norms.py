"""Error norms, observed orders and relative max-norm errors."""
from dataclasses import dataclass, field
import math

import numpy as np

from ..assembly import quadrature_points, triangle_rule
from ..errors import ConfigError


@dataclass
class ErrorReport:
    """L2 and H1-seminorm errors with observed orders between levels."""

    l2_error: list = field(default_factory=list)
    h1_semi_error: list = field(default_factory=list)
    h: list = field(default_factory=list)
    l2_order: list = field(default_factory=list)
    h1_order: list = field(default_factory=list)

    def add(self, l2, h1, h=None):
        self.l2_error.append(float(l2))
        self.h1_semi_error.append(float(h1))
        self.h.append(None if h is None else float(h))
        self.l2_order = order_table(self.l2_error)
        self.h1_order = order_table(self.h1_semi_error)


def _locate_in(space, pts):
    tri, bary = space.locator().locate(pts)
    return tri, bary


def error_norms(coarse, reference):
    """L2 and H1-seminorm norms of ``w_coarse - w_reference``.

    The difference is integrated on the reference triangulation with the
    degree-5 rule; the coarse field is evaluated exactly (P1 point
    evaluation) at the reference quadrature points, on the same subdomain.

    Parameters
    ----------
    coarse, reference : tuple
        ``(spaces, w)`` pairs; ``spaces`` is a ProblemSpaces.

    Returns
    -------
    (float, float)
        ``(l2, h1_semi)``.

    Raises
    ------
    ConfigError
        If the two meshes do not cover the same domain.
    """
    cs, cw = coarse
    rs, rw = reference
    rule = triangle_rule(5)
    l2 = h1 = 0.0
    for sub in (0, 1):
        csp = cs.spaces[sub]
        rsp = rs.spaces[sub]
        r_area, r_grad = rsp.geometry()
        c_area, c_grad = csp.geometry()
        if not math.isclose(r_area.sum(), c_area.sum(), rel_tol=1e-9, abs_tol=1e-12):
            raise ConfigError(f"subdomain {sub} areas differ: {c_area.sum()!r} vs "
                              f"{r_area.sum()!r}")
        x = quadrature_points(rsp, rule).reshape(-1, 2)
        tri, bary = _locate_in(csp, x)
        if np.any(tri < 0):
            raise ConfigError(f"reference quadrature point {tuple(x[tri < 0][0])} lies "
                              f"outside the coarse subdomain {sub}")
        cv = csp.local(cw)
        rv = rsp.local(rw)
        uc = (cv[csp.cells[tri]] * bary).sum(axis=1)
        ur = (rv[rsp.cells] @ rule.points.T).ravel()
        gc = np.einsum("ki,kid->kd", cv[csp.cells[tri]], c_grad[tri])
        gr = np.einsum("ki,kid->kd", rv[rsp.cells], r_grad)
        gr = np.repeat(gr, len(rule.weights), axis=0)
        wq = (2.0 * r_area[:, None] * rule.weights[None]).ravel()
        l2 += float(wq @ (uc - ur) ** 2)
        h1 += float(wq @ ((gc - gr) ** 2).sum(axis=1))
    return math.sqrt(l2), math.sqrt(h1)


def error_vs_exact(spaces, w, exact, grad):
    """L2 and H1-seminorm errors against exact piecewise fields.

    Parameters
    ----------
    exact : tuple of callables
        ``exact[i](x, y)`` on subdomain i.
    grad : tuple of callables
        ``grad[i](x, y) -> (gx, gy)`` on subdomain i.
    """
    rule = triangle_rule(5)
    l2 = h1 = 0.0
    for sub in (0, 1):
        sp_ = spaces.spaces[sub]
        area, grads = sp_.geometry()
        x = quadrature_points(sp_, rule)
        v = sp_.local(w)[sp_.cells]
        uh = v @ rule.points.T
        gh = np.einsum("ki,kid->kd", v, grads)
        ue = np.asarray(exact[sub](x[..., 0], x[..., 1]), dtype=float)
        gx, gy = grad[sub](x[..., 0], x[..., 1])
        gx = np.broadcast_to(np.asarray(gx, dtype=float), ue.shape)
        gy = np.broadcast_to(np.asarray(gy, dtype=float), ue.shape)
        wq = 2.0 * area[:, None] * rule.weights[None]
        l2 += float((wq * (uh - ue) ** 2).sum())
        h1 += float((wq * ((gh[:, None, 0] - gx) ** 2 + (gh[:, None, 1] - gy) ** 2)).sum())
    return math.sqrt(l2), math.sqrt(h1)


def order_table(errors, h=None):
    """Observed orders between successive refinements.

    With ``h`` omitted the refinement factor is 2 and
    ``order_k = log2(e_k / e_{k+1})``; otherwise
    ``log(e_k / e_{k+1}) / log(h_k / h_{k+1})``.  Undefined orders (a zero
    error) are reported as ``None``.
    """
    out = []
    for k in range(len(errors) - 1):
        a, b = errors[k], errors[k + 1]
        if not (a > 0 and b > 0):
            out.append(None)
            continue
        ratio = 2.0 if h is None else h[k] / h[k + 1]
        out.append(math.log(a / b) / math.log(ratio))
    return out


def e_inf(u, v):
    """Relative max-norm error ``|u - v|_inf / |v|_inf``."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ConfigError(f"length mismatch: {u.shape} vs {v.shape}")
    den = float(np.max(np.abs(v), initial=0.0))
    if den == 0.0:
        raise ConfigError("reference vector is identically zero")
    return float(np.max(np.abs(u - v))) / den


def format_table(levels, report, title=""):
    """Plain-text table in the ``error (order)`` layout."""
    lines = []
    if title:
        lines.append(title)
    lines.append(f"{'n':>6}  {'L2 error (order)':>22}  {'H1 semi-norm error (order)':>28}")
    for k, n in enumerate(levels):
        l2 = f"{report.l2_error[k]:.3e}"
        h1 = f"{report.h1_semi_error[k]:.3e}"
        if k > 0:
            lo = report.l2_order[k - 1]
            ho = report.h1_order[k - 1]
            l2 += f" ({lo:.2f})" if lo is not None else " (n/a)"
            h1 += f" ({ho:.2f})" if ho is not None else " (n/a)"
        lines.append(f"{n:>6}  {l2:>22}  {h1:>28}")
    return "\n".join(lines)
