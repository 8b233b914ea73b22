import pytest

from mhfem.errors import ParseError
from mhfem.mesh import check_invariants, gen_disk_bidomain
from mhfem.mesh_io import read_gmsh, read_mesh, write_mesh

GMSH_TWO_TRIANGLES = """$MeshFormat
2.2 0 8
$EndMeshFormat
$Nodes
4
1 0 0 0
2 1 0 0
3 1 1 0
4 0 1 0
$EndNodes
$Elements
6
1 1 2 3 1 1 2
2 1 2 3 1 2 3
3 1 2 3 1 3 4
4 1 2 3 1 4 1
5 2 2 1 1 1 2 3
6 2 2 1 1 1 3 4
$EndElements
"""


@pytest.mark.invariant
def test_roundtrip_exact(tmp_path, rect_nonconformal, disk_mesh):
    for k, m in enumerate((rect_nonconformal, disk_mesh,
                           gen_disk_bidomain(2 ** 0.5, 10.0, 20, 12, 1.1))):
        p = tmp_path / f"m{k}.txt"
        write_mesh(m, p)
        back = read_mesh(p)
        assert back.same_as(m)
        check_invariants(back)


def test_truncated_file_names_section(tmp_path, strip_mesh):
    p = tmp_path / "m.txt"
    write_mesh(strip_mesh, p)
    lines = p.read_text().splitlines()
    cut = lines.index(next(ln for ln in lines if ln.startswith("TRIANGLES"))) + 3
    p.write_text("\n".join(lines[:cut]) + "\n")
    with pytest.raises(ParseError) as exc:
        read_mesh(p)
    assert exc.value.section == "TRIANGLES"
    assert exc.value.line is not None


def test_malformed_record_reports_line(tmp_path, strip_mesh):
    p = tmp_path / "m.txt"
    write_mesh(strip_mesh, p)
    lines = p.read_text().splitlines()
    lines[2] = "1.0 abc"
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(ParseError) as exc:
        read_mesh(p)
    assert exc.value.line == 3


def test_gmsh_two_triangles(tmp_path):
    p = tmp_path / "two.msh"
    p.write_text(GMSH_TWO_TRIANGLES)
    m = read_gmsh(p)
    assert m.n_vertices == 4
    assert m.n_triangles == 2
    assert len(m.boundary_edges) == 4
    assert abs(m.areas.sum() - 1.0) < 1e-15


def test_gmsh_truncated(tmp_path):
    p = tmp_path / "bad.msh"
    p.write_text(GMSH_TWO_TRIANGLES.split("$Elements")[0] + "$Elements\n6\n1 1 2 3 1 1 2\n")
    with pytest.raises(ParseError):
        read_gmsh(p)
