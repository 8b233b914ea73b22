import math

import numpy as np
import pytest
import scipy.sparse as sp

from mhfem.assembly import assemble_a, assemble_coupling, assemble_load, isotropic
from mhfem.errors import ConfigError, SolveError
from mhfem.fespace import build_spaces, interpolate
from mhfem.harness.manufactured import manufactured_case
from mhfem.harness.studies import gaussian
from mhfem.mesh import Marker, Mesh, gen_rect_bidomain, gen_strip_bidomain
from mhfem.model import ModelParams
from mhfem.saddle import BlockSaddleSystem, SaddleSolver, residuals, solve
from mhfem.stepper import Simulation, StepperConfig
from oracles import conforming_p1_step


def system_for(mesh, kappa=1.0, d=(1.0, 2.0), c=(1.0, 0.0), tau=0.1, w_prev=None):
    spaces = build_spaces(mesh)
    A = assemble_a(spaces, isotropic(d[0], d[1], c, mass=1 / tau))
    B1 = assemble_coupling(spaces, 1.0)
    Bk = assemble_coupling(spaces, kappa)
    if w_prev is None:
        w_prev = interpolate(gaussian(2.0, (0.5, 0.5), (0.3, 0.3)), spaces)
    g = assemble_load(spaces, w_prev, None, tau)
    return spaces, BlockSaddleSystem(A, B1, Bk, g)


def test_zero_load_gives_zero(rect_nonconformal):
    spaces, s = system_for(rect_nonconformal, 2.0)
    w, lam = solve(s.with_rhs(np.zeros(s.n_w)))
    assert np.all(w == 0) and np.all(lam == 0)


def test_toy_kappa2_vs_dense():
    m = gen_strip_bidomain(1.0, 1.0, 0.0, 1.0, 2, 2, 2, 2)
    spaces, s = system_for(m, kappa=2.0)
    K = np.block([[s.A.toarray(), s.B1.toarray().T],
                  [s.Bk.toarray(), np.zeros((s.n_lambda, s.n_lambda))]])
    x = np.linalg.solve(K, np.concatenate([s.rhs_w, np.zeros(s.n_lambda)]))
    w, lam = solve(s)
    assert np.allclose(w, x[:s.n_w], rtol=1e-12, atol=1e-14)
    assert np.allclose(lam, x[s.n_w:], rtol=1e-12, atol=1e-14)


def test_residuals_examples(rect_nonconformal):
    spaces, s = system_for(rect_nonconformal, 1.7)
    w, lam = solve(s)
    r1, r2 = residuals(s, w, lam)
    scale = np.abs(s.rhs_w).max()
    assert r1 <= 1e-10 * scale
    assert r2 <= 1e-10 * np.abs(w).max()
    assert residuals(s, np.zeros(s.n_w), np.zeros(s.n_lambda))[0] == np.abs(s.rhs_w).max()
    e = np.zeros(s.n_w)
    e[np.argmax(np.abs(s.A.diagonal()))] = 1.0
    p1 = residuals(s, w + 1e-3 * e, lam)[0]
    p2 = residuals(s, w + 2e-3 * e, lam)[0]
    assert math.isclose(p2 / p1, 2.0, rel_tol=1e-6)


@pytest.mark.invariant
def test_constraint_satisfied(rect_nonconformal):
    spaces, s = system_for(rect_nonconformal, 3.3)
    w, _ = solve(s)
    assert np.abs(s.Bk @ w).max() <= 1e-10 * np.abs(w).max()


def test_scaling_linearity(rect_nonconformal):
    spaces, s = system_for(rect_nonconformal, 1.4)
    solver = SaddleSolver(s)
    w, lam = solver.solve(s.rhs_w)
    w3, lam3 = solver.solve(3.0 * s.rhs_w)
    assert np.allclose(w3, 3.0 * w, rtol=1e-12, atol=1e-14 * np.abs(w).max())
    assert np.allclose(lam3, 3.0 * lam, rtol=1e-12, atol=1e-14 * np.abs(lam).max())


def test_permuted_assembly_order():
    m = gen_rect_bidomain((-2, 3, -2, 3), (0, 1, 0, 1), 6, 6, 1.2, "nonconformal")
    rng = np.random.default_rng(0)
    perm = rng.permutation(m.n_triangles)
    eperm = rng.permutation(len(m.boundary_edges))
    pm = Mesh(m.vertices, m.triangles[perm], m.subdomain[perm], m.boundary_edges[eperm],
              m.boundary_markers[eperm])
    f = gaussian(2.0, (0.4, 0.5), (0.3, 0.3))
    out = []
    for mesh in (m, pm):
        spaces, s = system_for(mesh, kappa=2.0, c=(0.0, 0.0))
        w, _ = solve(s)
        out.append(np.concatenate([
            np.array([interpolate(f, spaces)[0]]),
            w[np.lexsort(np.vstack([spaces.space0.coords, spaces.space1.coords]).T)]]))
    assert np.allclose(out[0], out[1], rtol=1e-12, atol=1e-12 * np.abs(out[0]).max())


def test_singular_system_reports():
    m = gen_strip_bidomain(1.0, 1.0, 0.0, 1.0, 2, 2, 2, 2)
    spaces, s = system_for(m)
    bad = BlockSaddleSystem(sp.csr_matrix((s.n_w, s.n_w)), s.B1, s.Bk, s.rhs_w)
    with pytest.raises(SolveError):
        solve(bad)


def test_shape_mismatch():
    m = gen_strip_bidomain(1.0, 1.0, 0.0, 1.0, 2, 2, 2, 2)
    spaces, s = system_for(m)
    with pytest.raises(ConfigError):
        BlockSaddleSystem(s.A, s.B1[:, :-1], s.Bk, s.rhs_w)


def test_conforming_limit_small(rect_conformal):
    params = ModelParams(d0=1.3, d1=1.3, alpha=0.5, c=(0.0, 0.0))
    sim = Simulation(rect_conformal, params, StepperConfig(tau=0.2), react=False)
    u0 = gaussian(3.0, (0.5, 0.4), (0.4, 0.4))(*rect_conformal.vertices.T)
    u0[rect_conformal.vertices_with(Marker.OUTER_DIRICHLET)] = 0.0
    w0 = np.concatenate([u0[sim.spaces.space0.vertex_ids], u0[sim.spaces.space1.vertex_ids]])
    st = sim.step(sim.initial_state(w0))
    ref = conforming_p1_step(rect_conformal, 1.3, 0.2, u0)
    for space in sim.spaces.spaces:
        assert np.max(np.abs(space.local(st.w) - ref[space.vertex_ids])) <= 1e-10


def test_multiplier_converges_to_flux():
    # c = 0: lambda approximates the interface flux of the exact solution
    case = manufactured_case(math.sqrt(2.0), 1.0, 2.0, (0.0, 0.0))
    x = case.symbols["x"]
    w0x = float(case.symbols["w0"].diff(x).subs(x, 0))
    errs = []
    for n in (6, 11, 21):
        mesh = gen_strip_bidomain(case.L, case.L_far, 0.0, 1.0, n, n, n, n)
        sim = Simulation(mesh, case.params, StepperConfig(tau=case.tau), forcing=case.forcing,
                         react=False)
        st = sim.step(sim.initial_state(np.zeros(sim.spaces.n_w)))
        # normal from habitat (x > 0) into x < 0 is (-1, 0): lambda = d0 w0'(0)
        errs.append(np.abs(st.lam - case.params.d0 * w0x).max())
    assert errs[0] > errs[1] > errs[2]
