import math

import numpy as np
import pytest
from scipy.integrate import solve_bvp

from mhfem.errors import ConfigError, GeometryError
from mhfem.model import ModelParams, kappa, tail_exponent
from mhfem.oracle1d import make_grid, resample, solve_1d_steady, write_csv

PERSIST = ModelParams(d0=1.0, d1=1.0, r=3.0, a=1.0, m=1.0, alpha=0.5, c=(0.0, 0.0),
                      robin_b=0.0)


def bvp_reference(p, L, L_far, xs):
    """Steady profile from scipy's collocation solver on the two halves
    mapped to ``s in [0, 1]``: ``x = s L`` on the right, ``x = -s L'`` on the left."""
    c = p.c[0]
    kap = kappa(p)

    def rhs(s, y):
        u0, q0, u1, q1 = y  # q = d w / d s
        f0 = -(c * q0 / L + u0 * (p.r - p.a * u0)) * L * L / p.d0
        f1 = -(-c * q1 / L_far - p.m * u1) * L_far * L_far / p.d1
        return np.vstack([q0, f0, q1, f1])

    def bc(ya, yb):
        u0a, q0a, u1a, q1a = ya
        u0b, q0b, u1b, q1b = yb
        return np.array([
            u0a - kap * u1a,
            p.d0 * q0a / L + c * u0a - (-p.d1 * q1a / L_far + c * u1a),
            p.d0 * q0b / L + c * u0b - p.robin_b * u0b,
            u1b,
        ])

    s = np.linspace(0, 1, 201)
    y = np.vstack([np.full_like(s, 2.0), np.zeros_like(s), 2.0 * (1 - s), -2.0 * np.ones_like(s)])
    sol = solve_bvp(rhs, bc, s, y, tol=1e-8, max_nodes=100000)
    assert sol.success
    out = np.where(xs >= 0, sol.sol(np.clip(xs / L, 0, 1))[0],
                   sol.sol(np.clip(-xs / L_far, 0, 1))[2])
    return out


def test_grid_shape():
    g = make_grid(1.0, 8.0, 0.01, 1.005)
    assert g.right[0] == 0.0 and g.right[-1] == 1.0 and len(g.right) == 101
    assert g.left[0] == -8.0 and g.left[-1] == 0.0
    w = np.diff(g.left)[::-1]
    assert np.allclose(w[1:] / w[:-1], 1.005, rtol=1e-12)
    assert math.isclose(w[0], 0.01, rel_tol=0.05)
    assert g.interface_index == len(g.left) - 1 and g.n == len(g.nodes)
    with pytest.raises(ConfigError):
        make_grid(1.0, 8.0, 0.0)
    with pytest.raises(ConfigError):
        make_grid(1.0, 8.0, 0.1, 0.9)


def test_requires_robin():
    with pytest.raises(ConfigError):
        solve_1d_steady(PERSIST.replace(robin_b=None), 1.0, 8.0, h0=0.05)
    with pytest.raises(ConfigError):
        solve_1d_steady(PERSIST, 1.0, 8.0)


@pytest.mark.invariant
def test_jump_ratio_is_kappa():
    p = PERSIST.replace(alpha=0.7, d1=2.0, c=(0.5, 0.0), robin_b=-0.2)
    pr = solve_1d_steady(p, 1.0, 8.0, h0=0.02, tol=1e-9)
    assert pr.converged
    assert abs(pr.jump_ratio - kappa(p)) <= 1e-6 * kappa(p)


@pytest.mark.invariant
def test_tail_slope_matches_root():
    assert tail_exponent(PERSIST) == 1.0
    pr = solve_1d_steady(PERSIST, 1.0, 8.0, h0=0.01, tol=1e-9)
    x, w = pr.grid.left, pr.left
    i, j = np.searchsorted(x, -5.0), np.searchsorted(x, -1.0)
    slope = math.log(w[j] / w[i]) / (x[j] - x[i])
    assert abs(slope - 1.0) <= 0.01


@pytest.mark.invariant
def test_symmetric_profile_monotone():
    pr = solve_1d_steady(PERSIST, 1.0, 8.0, h0=0.02, tol=1e-9)
    assert np.all(np.diff(pr.right) > 0)
    assert np.all(np.diff(pr.left) > 0)


def test_matches_collocation_reference():
    p = PERSIST.replace(alpha=0.6, d1=1.5, c=(0.4, 0.0), robin_b=-0.3)
    errs = []
    for h in (0.04, 0.02, 0.01):
        pr = solve_1d_steady(p, 1.0, 6.0, h0=h, tol=1e-10)
        xs = np.concatenate([pr.grid.left[:-1], pr.grid.right])
        vals = np.concatenate([pr.left[:-1], pr.right])
        errs.append(np.abs(vals - bvp_reference(p, 1.0, 6.0, xs)).max())
    assert errs[-1] <= 1e-3
    assert errs[0] / errs[1] > 3.0 and errs[1] / errs[2] > 3.0


def test_steady_state_independent_of_tau():
    a = solve_1d_steady(PERSIST, 1.0, 8.0, h0=0.02, tau=0.025, tol=1e-11)
    b = solve_1d_steady(PERSIST, 1.0, 8.0, h0=0.02, tau=0.1, tol=1e-11)
    assert np.abs(a.values - b.values).max() <= 1e-8


def test_resample(tmp_path):
    p = PERSIST.replace(alpha=0.7)
    pr = solve_1d_steady(p, 1.0, 8.0, h0=0.05, tol=1e-9)
    assert resample(pr, [0.0], side=0)[0] == pr.right[0]
    assert resample(pr, [0.0], side=1)[0] == pr.left[-1]
    assert resample(pr, [1.0])[0] == pr.right[-1]
    assert resample(pr, [-8.0])[0] == pr.left[0]
    mid = 0.5 * (pr.grid.right[3] + pr.grid.right[4])
    assert math.isclose(resample(pr, [mid])[0], 0.5 * (pr.right[3] + pr.right[4]), rel_tol=1e-14)
    with pytest.raises(GeometryError):
        resample(pr, [1.5])
    with pytest.raises(GeometryError):
        resample(pr, [-9.0])
    write_csv(pr, tmp_path / "p.csv")
    rows = (tmp_path / "p.csv").read_text().splitlines()
    assert rows[0] == "x,w" and len(rows) == pr.grid.n + 1


def test_resample_matches_dense_linear_interpolation():
    pr = solve_1d_steady(PERSIST, 1.0, 8.0, h0=0.05, tol=1e-9)
    rng = np.random.default_rng(7)
    xs = rng.uniform(-8.0, 1.0, 300)
    got = resample(pr, xs)
    # independent oracle: locate each point and blend the two bracketing nodes
    nodes = np.concatenate([pr.grid.left, pr.grid.right[1:]])
    vals = np.concatenate([pr.left, pr.right[1:]])
    k = np.clip(np.searchsorted(nodes, xs) - 1, 0, len(nodes) - 2)
    s = (xs - nodes[k]) / (nodes[k + 1] - nodes[k])
    want = (1 - s) * vals[k] + s * vals[k + 1]
    assert np.allclose(got[xs < 0], want[xs < 0], rtol=1e-13, atol=1e-15)
    assert np.allclose(got[xs > 0], want[xs > 0], rtol=1e-13, atol=1e-15)


def test_humped_grid_difference_published_value():
    from mhfem.config import load_config
    from mhfem.harness.norms import e_inf
    cfg = load_config(preset_name="humped")
    p, L, L_far = cfg.params(), cfg.mesh["L"], cfg.mesh["L_far"]
    coarse = solve_1d_steady(p, L, L_far, h0=2.5e-3, tau=2.5e-2, tol=1e-3)
    fine = solve_1d_steady(p, L, L_far, h0=1.25e-3, tau=1.25e-3, tol=1e-3)
    xs = np.concatenate([fine.grid.left[:-1], fine.grid.right[1:]])
    diff = e_inf(resample(coarse, xs), resample(fine, xs))
    assert 3.4e-4 / 3 <= diff <= 3.4e-4 * 3, f"relative grid difference {diff:.2e}"
