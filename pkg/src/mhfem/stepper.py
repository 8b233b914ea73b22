"""IMEX Euler time stepping on the reference frame.

Each step solves the hybrid system with all linear terms implicit and the
reaction explicit::

    w^{n+1}/tau - div(D grad w^{n+1}) - c . grad w^{n+1} = G(w^n) + w^n/tau

subject to the weak jump constraint.  A run stops at a steady state (a
travelling pulse in the physical frame), at a step cap, or at a final time.
"""
from dataclasses import dataclass, field, replace
import logging
import math

import numpy as np

from .assembly import assemble_a, assemble_coupling, assemble_load, assemble_mass
from .errors import ConfigError, DivergenceError
from .fespace import build_spaces
from .model import AleMap, ale_coefficients, kappa, reaction
from .saddle import BlockSaddleSystem, SaddleSolver

log = logging.getLogger(__name__)

CONVERGED = "CONVERGED"
NOT_CONVERGED = "NOT_CONVERGED"
HORIZON = "HORIZON"


@dataclass(frozen=True)
class StepperConfig:
    """Time-stepping controls.

    Attributes
    ----------
    tau : float
        Time step.
    tol_steady : float
        Stop when the steady metric drops below this value.
    max_steps : int
        Step cap per time-step level.
    tau_final : float, optional
        After converging, halve ``tau`` and continue until ``tau <= tau_final``.
    t_final : float, optional
        Stop at this time instead of at a steady state.
    snapshot_every : int
        Call the snapshot hook every k-th step (0 disables it).
    """

    tau: float = 0.1
    tol_steady: float = 1e-5
    max_steps: int = 100000
    tau_final: float = None
    t_final: float = None
    snapshot_every: int = 0

    def __post_init__(self):
        if not self.tau > 0:
            raise ConfigError(f"tau must be positive (got {self.tau})")
        if not self.tol_steady > 0:
            raise ConfigError(f"tol_steady must be positive (got {self.tol_steady})")
        if self.max_steps < 1:
            raise ConfigError("max_steps must be >= 1")
        if self.tau_final is not None and not self.tau_final > 0:
            raise ConfigError("tau_final must be positive")


@dataclass
class SimState:
    """Coefficient vectors at one time level."""

    w: np.ndarray
    lam: np.ndarray
    t: float = 0.0
    step_index: int = 0
    steady_metric: float = math.inf
    tau: float = None
    constraint_residual: float = 0.0


@dataclass
class RunResult:
    """Outcome of :meth:`Simulation.run`."""

    state: SimState
    status: str
    metrics: list = field(default_factory=list)
    times: list = field(default_factory=list)
    populations: list = field(default_factory=list)
    constraint_residuals: list = field(default_factory=list)


class Simulation:
    """Hybrid finite element solver for one mesh and parameter set.

    Parameters
    ----------
    mesh : Mesh
    params : ModelParams
    config : StepperConfig
    ale : AleMap, optional
        Reference-frame map; defaults to the linear shift with ``params.c``.
    forcing : tuple of callables, optional
        Additional source per subdomain.
    react : bool
        Include the reaction term ``G``.
    """

    def __init__(self, mesh, params, config=None, ale=None, forcing=None, react=True,
                 spaces=None):
        self.mesh = mesh
        self.params = params
        self.config = config or StepperConfig()
        self.ale = ale or AleMap("linear_shift", params.c[0], params.c[1])
        self.forcing = forcing
        self.react = react
        self.spaces = spaces or build_spaces(mesh)
        self.kappa = kappa(params)
        self.B1 = assemble_coupling(self.spaces, 1.0)
        self.Bk = assemble_coupling(self.spaces, self.kappa)
        self.M = assemble_mass(self.spaces)
        self._solver = None
        self._solver_key = None

    # -- operators -------------------------------------------------------
    def coefficients(self, t, tau):
        return ale_coefficients(self.ale, t, self.params, tau)

    def solver(self, t, tau):
        """Factorized operator at time ``t`` (cached when time-independent)."""
        key = (tau, t if self.ale.time_dependent else None)
        if self._solver is None or self._solver_key != key:
            A = assemble_a(self.spaces, self.coefficients(t, tau))
            self._solver = SaddleSolver(BlockSaddleSystem(A, self.B1, self.Bk))
            self._solver_key = key
        return self._solver

    def _reaction(self):
        if not self.react:
            return None
        p = self.params
        return lambda u, sub: reaction(u, sub, p)

    # -- quantities ------------------------------------------------------
    def steady_metric(self, w_new, w_old, tau):
        """``sqrt(d^T M d) / tau`` with ``d = w_new - w_old``."""
        d = w_new - w_old
        return float(math.sqrt(max(d @ (self.M @ d), 0.0))) / tau

    def total(self, w):
        """Integral of ``w`` over the reference domain."""
        return float(np.ones(self.spaces.n_w) @ (self.M @ w))

    def population(self, state):
        """Physical total population at the state's time."""
        return self.total(state.w) * self.ale.jacobian(state.t)

    def initial_state(self, w0):
        w0 = np.asarray(w0, dtype=float)
        if w0.shape != (self.spaces.n_w,):
            raise ConfigError(f"initial vector has length {len(w0)}, expected {self.spaces.n_w}")
        w0 = w0.copy()
        w0[self.spaces.dirichlet_dofs] = 0.0
        return SimState(w0, np.zeros(self.spaces.n_lambda), 0.0, 0, math.inf,
                        self.config.tau)

    # -- stepping --------------------------------------------------------
    def step(self, state, tau=None):
        """Advance one IMEX step."""
        tau = tau or state.tau or self.config.tau
        t_new = state.t + tau
        solver = self.solver(t_new, tau)
        g = assemble_load(self.spaces, state.w, self._reaction(), tau, forcing=self.forcing)
        if not np.all(np.isfinite(g)):
            raise DivergenceError(f"non-finite load at step {state.step_index + 1}",
                                  step=state.step_index + 1)
        w, lam = solver.solve(g)
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(lam))):
            raise DivergenceError(f"non-finite solution at step {state.step_index + 1}",
                                  step=state.step_index + 1)
        wmax = float(np.max(np.abs(w), initial=0.0))
        cons = float(np.max(np.abs(self.Bk @ w), initial=0.0))
        return SimState(w, lam, t_new, state.step_index + 1,
                        self.steady_metric(w, state.w, tau), tau,
                        cons / wmax if wmax > 0 else 0.0)

    def run(self, w0, hook=None, record_population=False):
        """Step until steady, the step cap, or ``config.t_final``.

        Returns
        -------
        RunResult
            ``status`` is CONVERGED, NOT_CONVERGED or HORIZON.
        """
        cfg = self.config
        state = self.initial_state(w0)
        res = RunResult(state, NOT_CONVERGED)
        if record_population:
            res.times.append(0.0)
            res.populations.append(self.population(state))
        tau = cfg.tau
        while True:
            state, status = self._run_level(state, tau, res, hook, record_population)
            if status != CONVERGED or cfg.tau_final is None or tau <= cfg.tau_final * (1 + 1e-12):
                break
            tau = tau / 2.0
            log.info("refining tau to %g at t = %g", tau, state.t)
        res.state = state
        res.status = status
        return res

    def _run_level(self, state, tau, res, hook, record_population):
        cfg = self.config
        state = replace(state, tau=tau)
        for _ in range(cfg.max_steps):
            if cfg.t_final is not None and state.t + tau > cfg.t_final * (1 + 1e-12):
                return state, HORIZON
            state = self.step(state, tau)
            res.metrics.append(state.steady_metric)
            res.constraint_residuals.append(state.constraint_residual)
            if record_population:
                res.times.append(state.t)
                res.populations.append(self.population(state))
            if hook is not None and cfg.snapshot_every and state.step_index % cfg.snapshot_every == 0:
                hook(state)
            if cfg.t_final is None and state.steady_metric < cfg.tol_steady:
                return state, CONVERGED
        return state, NOT_CONVERGED


def run_to_steady(sim, w0, hook=None):
    """Run ``sim`` from ``w0``; returns ``(state, metric history, status)``."""
    res = sim.run(w0, hook=hook)
    return res.state, res.metrics, res.status
