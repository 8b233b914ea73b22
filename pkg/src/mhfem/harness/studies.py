"""Convergence, cross-validation and scenario drivers.

Each driver builds meshes from a scenario description, runs the stepper and
returns plain result objects; writing files is left to the caller.
"""
from dataclasses import dataclass, field
import logging
import math

import numpy as np

from ..errors import ConfigError
from ..fespace import evaluate, interpolate_pieces
from ..mesh import gen_disk_bidomain, gen_rect_bidomain, gen_strip_bidomain
from ..model import AleMap, resolve_robin
from ..oracle1d import resample, solve_1d_steady
from ..stepper import CONVERGED, Simulation, StepperConfig
from .manufactured import manufactured_case
from .norms import ErrorReport, e_inf, error_norms, error_vs_exact

log = logging.getLogger(__name__)


def gaussian(height, center, sigma=(0.5, 0.5)):
    """``height * exp(-((x - x0)^2 / sx^2 + (y - y0)^2 / sy^2) / 2)``."""
    x0, y0 = map(float, center)
    sx, sy = map(float, sigma)

    def f(x, y):
        return height * np.exp(-0.5 * (((x - x0) / sx) ** 2 + ((y - y0) / sy) ** 2))

    return f


def build_mesh(spec, level=None):
    """Mesh for a scenario mesh description.

    ``spec`` is a mapping with ``kind`` in ``{"rect", "disk", "strip"}`` and
    the generator arguments.  For ``rect`` and ``strip`` a ``level`` (the
    interface node count seen from subdomain 1) overrides the base count and
    scales the other counts proportionally.
    """
    kind = spec.get("kind")
    if kind == "rect":
        n = int(level or spec["n_inner_side"])
        n_outer = spec.get("n_outer_side")
        n_outer = int(n_outer) if n_outer and level is None else max(5, n // 2)
        inner = tuple(spec["inner"])
        h_in = max(inner[1] - inner[0], inner[3] - inner[2]) / (n - 1)
        grading = spec.get("grading")
        if grading is None or level is not None:
            grading = 1.0 + float(spec.get("grading_rate", 1.0)) * h_in
        return gen_rect_bidomain(tuple(spec["outer"]), inner, n, n_outer, grading,
                                 spec.get("conformity", "conformal"))
    if kind == "disk":
        return gen_disk_bidomain(spec["r_inner"], spec["r_outer"], int(spec["n_gamma"]),
                                 int(spec["n_outer"]), spec.get("grading", 1.1),
                                 tuple(spec.get("center", (0.0, 0.0))))
    if kind == "strip":
        f = 1 if level is None else int(level)

        def scaled(key):
            return (int(spec[key]) - 1) * f + 1

        return gen_strip_bidomain(spec["L"], spec["L_far"], spec["y0"], spec["y1"],
                                  scaled("n_gamma0"), scaled("n_gamma1"), scaled("nx0"),
                                  scaled("nx1"), n_far=int(spec.get("n_far", 5)))
    raise ConfigError(f"unknown mesh kind {kind!r}")


@dataclass
class LevelResult:
    """Converged field on one mesh."""

    level: int
    sim: Simulation
    w: np.ndarray
    status: str
    steps: int
    h: float

    @property
    def spaces(self):
        return self.sim.spaces


@dataclass
class ConvergenceResult:
    levels: list
    report: ErrorReport
    runs: list = field(default_factory=list)
    reference: LevelResult = None


def run_level(mesh, params, stepper, initial, level=0):
    """Run one mesh to a steady state."""
    sim = Simulation(mesh, params, stepper)
    w0 = interpolate_pieces(initial, initial, sim.spaces)
    res = sim.run(w0)
    if res.status != CONVERGED:
        log.warning("level %s stopped with status %s after %d steps", level, res.status,
                    res.state.step_index)
    return LevelResult(level, sim, res.state.w, res.status, res.state.step_index, mesh.h)


def rect_convergence(mesh_spec, params, stepper, initial, levels, ref_level,
                     reference=None):
    """Errors of steady states on a family of rectangle meshes.

    The reference is computed on a conformal mesh at ``ref_level`` unless a
    precomputed :class:`LevelResult` is supplied.
    """
    if reference is None:
        ref_spec = dict(mesh_spec, conformity="conformal")
        reference = run_level(build_mesh(ref_spec, ref_level), params, stepper, initial,
                              ref_level)
    report = ErrorReport()
    runs = []
    for n in levels:
        run = run_level(build_mesh(mesh_spec, n), params, stepper, initial, n)
        l2, h1 = error_norms((run.spaces, run.w), (reference.spaces, reference.w))
        report.add(l2, h1, run.h)
        runs.append(run)
        log.info("level %d: L2 %.3e H1 %.3e (%d steps)", n, l2, h1, run.steps)
    return ConvergenceResult(list(levels), report, runs, reference)


def manufactured_convergence(levels=(10, 20, 40, 80), kappa_value=math.sqrt(2.0), d0=1.0,
                             d1=2.0, c=(1.0, 0.0), conformity="nonconformal", tau=1.0):
    """Exact-solution errors on uniform unit strips ``(-1, 1) x (0, 1)``.

    One IMEX step from ``w = 0`` with the manufactured forcing solves the
    stationary problem exactly, so no time stepping error enters.
    """
    case = manufactured_case(kappa_value, d0, d1, c, tau=tau)
    report = ErrorReport()
    for n in levels:
        n0 = n - 1 if conformity == "nonconformal" else n
        mesh = gen_strip_bidomain(case.L, case.L_far, 0.0, 1.0, n0, n, n, n)
        sim = Simulation(mesh, case.params, StepperConfig(tau=case.tau),
                         ale=AleMap("linear_shift", *case.params.c), forcing=case.forcing,
                         react=False)
        state = sim.step(sim.initial_state(np.zeros(sim.spaces.n_w)))
        l2, h1 = error_vs_exact(sim.spaces, state.w, case.exact, case.grad)
        report.add(l2, h1, mesh.h)
    return ConvergenceResult(list(levels), report)


@dataclass
class CutComparison:
    """A 2D cut sampled at mesh nodes and compared to the 1D oracle."""

    x: np.ndarray
    fem: np.ndarray
    oracle: np.ndarray
    error: float
    status: str
    steps: int


def strip_cut(spaces, w, y):
    """Nodal values along ``y = const`` at the node abscissae of each side.

    Returns ``(x, values)`` ordered by ``x``, with ``x = 0`` listed twice
    (subdomain 1 value first).
    """
    xs, vs = [], []
    for sub in (1, 0):
        sp_ = spaces.spaces[sub]
        coords = sp_.coords
        span = np.ptp(coords[:, 1]) or 1.0
        on = np.abs(coords[:, 1] - y) <= 1e-9 * span
        if on.any():
            xv = np.unique(coords[on, 0])
        else:
            xv = np.unique(coords[:, 0])
        vals, _ = evaluate(sp_, w, np.column_stack([xv, np.full_like(xv, y)]), strict=True)
        xs.append(xv)
        vs.append(vals)
    return np.concatenate(xs), np.concatenate(vs)


def cross_validate(mesh, params, stepper, initial, oracle, y_cut):
    """Run the strip scenario and compare a cut with a 1D profile."""
    params = resolve_robin(params)
    run = run_level(mesh, params, stepper, initial)
    x, v = strip_cut(run.spaces, run.w, y_cut)
    nl = int(np.count_nonzero(x < 0)) + 1
    ref = np.concatenate([resample(oracle, x[:nl], side=1), resample(oracle, x[nl:], side=0)])
    return CutComparison(x, v, ref, e_inf(v, ref), run.status, run.steps)


def jump_ratio(spaces, w):
    """Side-0 over side-1 values at matching interface vertices (conformal)."""
    t0 = spaces.trace0
    t1 = spaces.trace1
    p0 = t0.node_points
    p1 = t1.node_points
    v0 = w[spaces.space0.dof_of_vertex[t0.nodes]]
    v1 = w[spaces.space1.dof_of_vertex[t1.nodes]]
    d = np.linalg.norm(p0[:, None] - p1[None], axis=2)
    j = d.argmin(axis=1)
    match = d[np.arange(len(p0)), j] <= 1e-12 * max(1.0, np.ptp(p0))
    return v0[match] / v1[j[match]]


def oracle_for(params, L, L_far, h0, tau, tol, rc=1.005):
    """1D steady profile for the strip cross-section."""
    return solve_1d_steady(resolve_robin(params), L, L_far, h0=h0, tau=tau, tol=tol, rc=rc)

