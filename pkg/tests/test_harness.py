import math

import numpy as np
import pytest
import sympy
from hypothesis import given, settings, strategies as st

from mhfem.errors import ConfigError
from mhfem.fespace import build_spaces, interpolate, interpolate_pieces
from mhfem.harness.export import export_csv, export_vtk, read_csv, read_vtk, write_table
from mhfem.harness.manufactured import manufactured_case
from mhfem.harness.norms import (ErrorReport, e_inf, error_norms, error_vs_exact, format_table,
                                 order_table)
from mhfem.harness.studies import jump_ratio, strip_cut
from mhfem.mesh import gen_rect_bidomain, gen_strip_bidomain


def strip_spaces(n):
    return build_spaces(gen_strip_bidomain(1.0, 1.0, 0.0, 1.0, n, n, n, n))


def test_error_norms_identical_is_zero():
    sp_ = strip_spaces(5)
    w = interpolate(lambda x, y: np.sin(x) + y, sp_)
    l2, h1 = error_norms((sp_, w), (sp_, w))
    assert l2 <= 1e-14 and h1 == 0.0


def test_error_norms_constant_offset():
    coarse, fine = strip_spaces(3), strip_spaces(6)
    # domain (-1, 1) x (0, 1) has area 2
    l2, h1 = error_norms((coarse, np.ones(coarse.n_w)), (fine, np.zeros(fine.n_w)))
    assert math.isclose(l2, math.sqrt(2.0), rel_tol=1e-12)
    assert h1 == 0.0


def test_error_norms_interpolant_ratio():
    # vanishes on the Dirichlet end x = -1, so the interpolant is exact there
    f = lambda x, y: (x + 1) ** 2
    ref = strip_spaces(65)
    wr = interpolate(f, ref)
    e = [error_norms((s, interpolate(f, s)), (ref, wr))[0]
         for s in (strip_spaces(9), strip_spaces(17))]
    # the fine interpolant is not exact, so the ratio is only near 4
    assert 3.5 < e[0] / e[1] < 5.0
    ex = (lambda x, y: (x + 1) ** 2 + 0 * y,) * 2
    gr = (lambda x, y: (2 * (x + 1), 0.0),) * 2
    e = [error_vs_exact(s, interpolate(f, s), ex, gr)[0] for s in (strip_spaces(9), strip_spaces(17))]
    assert 3.8 < e[0] / e[1] < 4.2


def test_error_norms_domain_mismatch():
    a = strip_spaces(4)
    b = build_spaces(gen_strip_bidomain(1.0, 2.0, 0.0, 1.0, 4, 4, 4, 4))
    with pytest.raises(ConfigError):
        error_norms((a, np.zeros(a.n_w)), (b, np.zeros(b.n_w)))


def test_error_vs_exact_linear_is_zero():
    sp_ = strip_spaces(4)
    w = interpolate(lambda x, y: 2 * (x + 1) * 1.0 + 0 * y, sp_)
    ex = (lambda x, y: 2 * (x + 1) + 0 * y,) * 2
    gr = (lambda x, y: (2.0, 0.0),) * 2
    l2, h1 = error_vs_exact(sp_, w, ex, gr)
    assert l2 <= 1e-14 and h1 <= 1e-13


def test_order_table_examples():
    assert math.isclose(order_table([4.63e-2, 1.21e-2])[0], 1.936, abs_tol=5e-3)
    assert math.isclose(order_table([1.44e-1, 7.09e-2])[0], 1.02, abs_tol=5e-3)
    assert order_table([3.0, 1.5]) == [1.0]
    assert order_table([0.0, 1.0]) == [None]
    hs = [0.1, 0.05, 0.025]
    for p, o in zip((2.0, 2.0), order_table([h ** 2 for h in hs], hs)):
        assert abs(o - p) <= 1e-12
    hs = [0.3, 0.1]
    assert abs(order_table([h ** 1.5 for h in hs], hs)[0] - 1.5) <= 1e-12


def test_error_report_and_table(tmp_path):
    rep = ErrorReport()
    for e in (4e-2, 1e-2, 2.5e-3):
        rep.add(e, 10 * e)
    assert rep.l2_order == [2.0, 2.0]
    txt = format_table([10, 20, 40], rep, "demo")
    assert "1.000e-02 (2.00)" in txt and txt.startswith("demo")
    write_table([10, 20, 40], rep, tmp_path / "t.txt", tmp_path / "t.csv")
    head, rows = read_csv(tmp_path / "t.csv")
    assert head == ["n", "l2_error", "l2_order", "h1_semi_error", "h1_order"]
    assert rows[0][2] == "" and float(rows[1][2]) == 2.0


def test_e_inf_examples():
    assert e_inf([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert math.isclose(e_inf([1.1, 2.0], [1.0, 2.0]), 0.05, rel_tol=1e-12)
    with pytest.raises(ConfigError):
        e_inf([1.0], [1.0, 2.0])
    with pytest.raises(ConfigError):
        e_inf([1.0, 2.0], [0.0, 0.0])


@pytest.mark.invariant
@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=2, max_size=8), st.floats(1e-3, 1e3))
def test_e_inf_scale_invariant(vals, s):
    v = np.array(vals)
    if np.abs(v).max() < 1e-6:
        return
    u = v + 0.1
    assert math.isclose(e_inf(s * u, s * v), e_inf(u, v), rel_tol=1e-10)


def test_manufactured_interface_residuals():
    case = manufactured_case(math.sqrt(2.0), 1.0, 2.0, (1.0, 0.0))
    jump, flux = case.interface_residuals()
    assert abs(jump) <= 1e-14 and abs(flux) <= 1e-14
    x = case.symbols["x"]
    # the forcing is the stationary operator applied to the exact pair
    r = sympy.simplify(case.symbols["w0"] / case.tau - sympy.diff(case.symbols["w0"], x, 2)
                       - sympy.diff(case.symbols["w0"], x) - case.symbols["f0"])
    assert abs(float(r.subs(x, 0.37))) <= 1e-12
    assert math.isclose(case.params.alpha / (1 - case.params.alpha) * math.sqrt(2.0),
                        math.sqrt(2.0), rel_tol=1e-14)


def test_manufactured_degenerate_case():
    case = manufactured_case(1.0, 1.0, 1.0, (0.0, 0.0))
    jump, flux = case.interface_residuals()
    assert abs(jump) <= 1e-14 and abs(flux) <= 1e-14
    assert case.params.alpha == 0.5
    with pytest.raises(ConfigError):
        manufactured_case(1.0, 1.0, 1.0, (1.0, 0.5))


def test_vtk_two_triangles(tmp_path):
    m = gen_strip_bidomain(0.5, 0.5, 0.0, 1.0, 2, 2, 2, 2)
    sp_ = build_spaces(m)
    w = np.arange(sp_.n_w, dtype=float)
    export_vtk(sp_, w, tmp_path / "a.vtk", title="demo")
    d = read_vtk(tmp_path / "a.vtk")
    assert d["points"].shape == (sp_.n_w, 3)
    assert d["cells"].shape == (m.n_triangles, 3)
    assert np.array_equal(d["point_data"]["density"], w)
    assert sorted(set(d["cell_data"]["subdomain"].astype(int))) == [0, 1]
    with pytest.raises(ValueError):
        export_vtk(sp_, w, tmp_path / "b.vtk", point_data={"bad": np.zeros(2)})


def test_vtk_preserves_jump(tmp_path):
    m = gen_rect_bidomain((-2, 3, -2, 3), (0, 1, 0, 1), 6, 6, 1.2)
    sp_ = build_spaces(m)
    kap = 2.5
    w = np.concatenate([kap * np.ones(sp_.space0.n_dofs), np.ones(sp_.space1.n_dofs)])
    assert np.allclose(jump_ratio(sp_, w), kap)
    export_vtk(sp_, w, tmp_path / "j.vtk")
    d = read_vtk(tmp_path / "j.vtk")
    pts, vals = d["points"][:, :2], d["point_data"]["density"]
    on_gamma = [i for i, p in enumerate(pts) if np.isclose(p[0], 0.0) and 0 <= p[1] <= 1]
    assert sorted(set(vals[on_gamma])) == [1.0, kap]


def test_csv_roundtrip(tmp_path):
    rows = [[1, 0.1 + 0.2, "a"], [2, 1e-300, "b"]]
    export_csv(rows, tmp_path / "r.csv", ["n", "v", "s"])
    head, back = read_csv(tmp_path / "r.csv")
    assert head == ["n", "v", "s"]
    assert float(back[0][1]) == 0.1 + 0.2 and float(back[1][1]) == 1e-300


def test_strip_cut_orders_and_doubles_interface():
    sp_ = strip_spaces(4)
    w = interpolate_pieces(lambda x, y: 2.0 + 0 * x, lambda x, y: 1.0 + 0 * x, sp_)
    x, v = strip_cut(sp_, w, 0.5)
    assert np.all(np.diff(x) >= 0) and np.count_nonzero(x == 0.0) == 2
    k = np.flatnonzero(x == 0.0)
    assert list(v[k]) == [1.0, 2.0]
