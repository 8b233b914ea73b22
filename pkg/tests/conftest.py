import numpy as np
import pytest

from mhfem.mesh import Mesh, Marker, gen_disk_bidomain, gen_rect_bidomain, gen_strip_bidomain


def unit_square_mesh(n=3, sub=0, marker=Marker.OUTER_NEUMANN):
    """Structured ``n x n`` grid on the unit square, one subdomain."""
    xs = np.linspace(0.0, 1.0, n)
    X, Y = np.meshgrid(xs, xs)
    verts = np.column_stack([X.ravel(), Y.ravel()])
    idx = np.arange(n * n).reshape(n, n)
    tris = []
    for j in range(n - 1):
        for i in range(n - 1):
            a, b, c, d = idx[j, i], idx[j, i + 1], idx[j + 1, i + 1], idx[j + 1, i]
            tris += [(a, b, c), (a, c, d)]
    ring = np.concatenate([idx[0, :-1], idx[:-1, -1], idx[-1, :0:-1], idx[:0:-1, 0]])
    edges = np.stack([ring, np.roll(ring, -1)], axis=1)
    return Mesh(verts, tris, [sub] * len(tris), edges, [int(marker)] * len(edges))


@pytest.fixture(scope="session")
def rect_conformal():
    return gen_rect_bidomain((-2.0, 3.0, -2.0, 3.0), (0.0, 1.0, 0.0, 1.0), 6, 6, 1.2)


@pytest.fixture(scope="session")
def rect_nonconformal():
    return gen_rect_bidomain((-2.0, 3.0, -2.0, 3.0), (0.0, 1.0, 0.0, 1.0), 6, 6, 1.2,
                             "nonconformal")


@pytest.fixture(scope="session")
def strip_mesh():
    return gen_strip_bidomain(1.0, 2.0, 0.0, 1.0, 5, 6, 6, 6)


@pytest.fixture(scope="session")
def disk_mesh():
    return gen_disk_bidomain(1.0, 3.0, 16, 12, 1.2)


_CRITERIA = {}


@pytest.fixture
def criterion():
    """Record ``(number, passed, detail)`` for the acceptance summary."""

    def record(number, passed, detail):
        _CRITERIA[number] = (bool(passed), detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        passed, detail = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
