import math

import numpy as np
import pytest

from mhfem.assembly import quadrature_points, triangle_rule
from mhfem.config import load_config
from mhfem.errors import ConfigError, DivergenceError
from mhfem.fespace import interpolate
from mhfem.harness.export import export_vtk, read_vtk
from mhfem.harness.studies import build_mesh, gaussian
from mhfem.mesh import Marker, gen_rect_bidomain, gen_strip_bidomain
from mhfem.model import ModelParams
from mhfem.stepper import (CONVERGED, HORIZON, NOT_CONVERGED, Simulation, StepperConfig,
                           run_to_steady)


@pytest.fixture(scope="module")
def neumann_mesh():
    return gen_rect_bidomain((-1, 2, -1, 2), (0, 1, 0, 1), 5, 5, 1.0,
                             outer_marker=Marker.OUTER_NEUMANN)


@pytest.fixture(scope="module")
def test1_coarse():
    cfg = load_config(preset_name="test1")
    mesh = build_mesh(cfg.mesh, 10)
    sim = Simulation(mesh, cfg.params(), cfg.stepper_config())
    w0 = interpolate(cfg.initial_field(), sim.spaces)
    return sim, sim.run(w0)


@pytest.mark.invariant
def test_zero_fixed_point(rect_nonconformal):
    sim = Simulation(rect_nonconformal, ModelParams(d1=2.0, alpha=0.6, c=(1.0, 0.0)))
    st = sim.step(sim.initial_state(np.zeros(sim.spaces.n_w)))
    assert np.all(st.w == 0) and st.steady_metric == 0.0


def test_constant_state_scalar_recurrence(neumann_mesh):
    p = ModelParams(d0=1.0, d1=1.0, alpha=0.5, r=0.0, a=0.5, m=0.5)
    sim = Simulation(neumann_mesh, p, StepperConfig(tau=0.1))
    st = sim.step(sim.initial_state(np.ones(sim.spaces.n_w)))
    assert np.allclose(st.w, 1.0 - 0.1 * 0.5, rtol=0, atol=1e-12)


def test_steady_fixed_point(neumann_mesh):
    p = ModelParams(d0=1.0, d1=1.0, alpha=0.5, r=1.0, a=1.0, m=0.0)
    sim = Simulation(neumann_mesh, p, StepperConfig(tau=0.1))
    st = sim.step(sim.initial_state(np.ones(sim.spaces.n_w)))
    assert np.abs(st.w - 1.0).max() <= 1e-10
    assert st.steady_metric <= 1e-10 / 0.1


def test_steady_metric_examples():
    mesh = gen_strip_bidomain(0.5, 0.5, 0.0, 1.0, 4, 5, 3, 3)
    sim = Simulation(mesh, ModelParams(robin_b=-1.0))
    w = np.linspace(0, 1, sim.spaces.n_w)
    assert sim.steady_metric(w, w, 0.1) == 0.0
    assert math.isclose(sim.steady_metric(w + 1.0, w, 0.1), 10.0, rel_tol=1e-13)


def test_steady_metric_matches_quadrature(rect_nonconformal):
    sim = Simulation(rect_nonconformal, ModelParams())
    rng = np.random.default_rng(1)
    a, b = rng.normal(size=(2, sim.spaces.n_w))
    rule = triangle_rule(5)
    total = 0.0
    for space in sim.spaces.spaces:
        area, _ = space.geometry()
        d = space.local(a - b)[space.cells] @ rule.points.T
        total += float((2 * area[:, None] * rule.weights * d ** 2).sum())
    assert quadrature_points(sim.spaces.space0, rule).shape[-1] == 2
    assert math.isclose(sim.steady_metric(a, b, 0.3), math.sqrt(total) / 0.3, rel_tol=1e-13)


def test_run_huge_tolerance_one_step(rect_nonconformal):
    sim = Simulation(rect_nonconformal, ModelParams(), StepperConfig(tol_steady=1e300))
    w0 = interpolate(gaussian(1.0, (0.5, 0.5)), sim.spaces)
    state, hist, status = run_to_steady(sim, w0)
    assert status == CONVERGED and state.step_index == 1 and len(hist) == 1


def test_run_zero_initial(rect_nonconformal):
    sim = Simulation(rect_nonconformal, ModelParams(r=0.0))
    state, hist, status = run_to_steady(sim, np.zeros(sim.spaces.n_w))
    assert status == CONVERGED and state.step_index == 1 and hist == [0.0]


def test_test1_coarse_converges(test1_coarse):
    sim, res = test1_coarse
    assert res.status == CONVERGED
    assert res.state.steady_metric < 1e-5
    # eventual monotone decrease over the final 10% of steps
    tail = np.array(res.metrics[-max(2, len(res.metrics) // 10):])
    assert np.all(np.diff(tail) < 0)
    assert max(res.constraint_residuals) <= 1e-10


def test_linear_decay(rect_nonconformal):
    p = ModelParams(r=-0.5, a=1e-12, m=0.7, d1=2.0, alpha=0.65)
    sim = Simulation(rect_nonconformal, p, StepperConfig(tau=0.05))
    st = sim.initial_state(interpolate(gaussian(4.0, (0.5, 0.5), (0.3, 0.3)), sim.spaces))
    norms = []
    for _ in range(30):
        st = sim.step(st)
        norms.append(math.sqrt(st.w @ (sim.M @ st.w)))
    assert np.all(np.diff(norms) <= 0)


def test_time_shift_export_commutes(tmp_path, test1_coarse):
    sim, res = test1_coarse
    c = np.array(sim.params.c)
    t = res.state.t
    export_vtk(sim.spaces, res.state.w, tmp_path / "ref.vtk")
    export_vtk(sim.spaces, res.state.w, tmp_path / "phys.vtk", shift=c * t)
    a, b = read_vtk(tmp_path / "ref.vtk"), read_vtk(tmp_path / "phys.vtk")
    assert np.allclose(b["points"][:, :2], a["points"][:, :2] + c * t, rtol=0, atol=1e-12)
    assert np.array_equal(a["point_data"]["density"], b["point_data"]["density"])


def test_tau_refinement(rect_nonconformal):
    cfg = StepperConfig(tau=0.2, tol_steady=1e-3, tau_final=0.05)
    sim = Simulation(rect_nonconformal, ModelParams(c=(0.5, 0.0)), cfg)
    res = sim.run(interpolate(gaussian(1.0, (0.5, 0.5)), sim.spaces))
    assert res.status == CONVERGED
    assert res.state.tau == 0.05


def test_final_time_and_step_cap(rect_nonconformal):
    sim = Simulation(rect_nonconformal, ModelParams(), StepperConfig(tau=0.1, t_final=0.55))
    res = sim.run(interpolate(gaussian(1.0, (0.5, 0.5)), sim.spaces), record_population=True)
    assert res.status == HORIZON and res.state.step_index == 5
    assert len(res.populations) == 6
    sim = Simulation(rect_nonconformal, ModelParams(), StepperConfig(tau=0.1, max_steps=3))
    res = sim.run(interpolate(gaussian(1.0, (0.5, 0.5)), sim.spaces))
    assert res.status == NOT_CONVERGED and res.state.step_index == 3


def test_snapshot_hook(rect_nonconformal):
    seen = []
    sim = Simulation(rect_nonconformal, ModelParams(),
                     StepperConfig(tau=0.1, max_steps=5, snapshot_every=2))
    sim.run(interpolate(gaussian(1.0, (0.5, 0.5)), sim.spaces), hook=seen.append)
    assert [s.step_index for s in seen] == [2, 4]


def test_divergence_reported(rect_nonconformal):
    p = ModelParams(r=1.0, a=1.0)
    sim = Simulation(rect_nonconformal, p, StepperConfig(tau=10.0, max_steps=200))
    with pytest.raises(DivergenceError) as exc, np.errstate(over="ignore", invalid="ignore"):
        sim.run(interpolate(lambda x, y: 10.0 + 0 * x, sim.spaces))
    assert exc.value.step is not None


def test_bad_initial_vector(rect_nonconformal):
    sim = Simulation(rect_nonconformal, ModelParams())
    with pytest.raises(ConfigError):
        sim.initial_state(np.zeros(3))
    with pytest.raises(ConfigError):
        StepperConfig(tau=0.0)


@pytest.mark.invariant
def test_runs_bitwise_deterministic(rect_nonconformal):
    out = []
    for _ in range(2):
        sim = Simulation(rect_nonconformal, ModelParams(d1=2.0, alpha=0.7, c=(1.0, 0.0)),
                         StepperConfig(tau=0.1, max_steps=20))
        out.append(sim.run(interpolate(gaussian(2.0, (0.5, 0.5)), sim.spaces)).state.w)
    assert np.array_equal(out[0], out[1])
