"""Mesh file input/output.

Native format (ASCII, sections in this order)::

    VERTICES <n>
    <x> <y>                      # repr() floats, round-trip exact
    TRIANGLES <m>
    <i> <j> <k> <subdomain>
    BOUNDARY <e>
    <i> <j> <marker>

Blank lines and ``#`` comments are ignored.  :func:`read_gmsh` imports the
ASCII MSH 2.2 subset of nodes, 2-node lines and 3-node triangles.
"""
import numpy as np

from .errors import ParseError
from .mesh import Marker, Mesh

_SECTIONS = ("VERTICES", "TRIANGLES", "BOUNDARY")


def write_mesh(mesh, path):
    """Write ``mesh`` in the native text format."""
    lines = [f"VERTICES {mesh.n_vertices}"]
    lines += [f"{x!r} {y!r}" for x, y in mesh.vertices.tolist()]
    lines.append(f"TRIANGLES {mesh.n_triangles}")
    lines += [f"{a} {b} {c} {s}" for (a, b, c), s in
              zip(mesh.triangles.tolist(), mesh.subdomain.tolist())]
    lines.append(f"BOUNDARY {len(mesh.boundary_edges)}")
    lines += [f"{a} {b} {m}" for (a, b), m in
              zip(mesh.boundary_edges.tolist(), mesh.boundary_markers.tolist())]
    try:
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write mesh to {path}: {exc}") from exc


def _content_lines(path):
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            text = raw.split("#", 1)[0].strip()
            if text:
                yield lineno, text


def read_mesh(path):
    """Read a mesh written by :func:`write_mesh`.

    Raises
    ------
    ParseError
        On a missing or truncated section or a malformed record.
    """
    lines = list(_content_lines(path))
    pos = 0
    data = {}
    last_line = lines[-1][0] if lines else 0
    for section, width in zip(_SECTIONS, (2, 4, 3)):
        if pos >= len(lines):
            raise ParseError("missing section header", line=last_line + 1, section=section)
        lineno, text = lines[pos]
        head = text.split()
        if len(head) != 2 or head[0] != section:
            raise ParseError(f"expected '{section} <count>'", line=lineno, section=section)
        try:
            count = int(head[1])
        except ValueError:
            raise ParseError("bad record count", line=lineno, section=section) from None
        pos += 1
        rows = []
        for _ in range(count):
            if pos >= len(lines):
                raise ParseError(f"truncated: expected {count} records, found {len(rows)}",
                                 line=last_line + 1, section=section)
            lineno, text = lines[pos]
            parts = text.split()
            if len(parts) != width:
                raise ParseError(f"expected {width} fields, found {len(parts)}",
                                 line=lineno, section=section)
            try:
                rows.append([float(p) for p in parts] if section == "VERTICES"
                            else [int(p) for p in parts])
            except ValueError:
                raise ParseError("malformed number", line=lineno, section=section) from None
            pos += 1
        data[section] = rows
    if pos != len(lines):
        raise ParseError("unexpected trailing content", line=lines[pos][0])
    verts = np.array(data["VERTICES"], dtype=float).reshape(-1, 2)
    tris = np.array(data["TRIANGLES"], dtype=np.int64).reshape(-1, 4)
    bnd = np.array(data["BOUNDARY"], dtype=np.int64).reshape(-1, 3)
    nv = len(verts)
    for name, arr in (("TRIANGLES", tris[:, :3]), ("BOUNDARY", bnd[:, :2])):
        if arr.size and (arr.min() < 0 or arr.max() >= nv):
            raise ParseError("vertex index out of range", section=name)
    return Mesh(verts, tris[:, :3], tris[:, 3], bnd[:, :2], bnd[:, 2])


def read_gmsh(path, subdomain_tags=None, marker_tags=None):
    """Import an ASCII Gmsh MSH 2.2 file.

    Parameters
    ----------
    path : str
    subdomain_tags : dict, optional
        Physical tag of triangles -> subdomain (default: tag 1 -> 0, others -> 1).
    marker_tags : dict, optional
        Physical tag of line elements -> :class:`Marker` value (default: the
        tag itself).

    Returns
    -------
    Mesh
    """
    lines = list(_content_lines(path))
    i = 0
    nodes = {}
    tris, subs, edges, marks = [], [], [], []

    def expect(tag):
        nonlocal i
        if i >= len(lines) or lines[i][1] != tag:
            ln = lines[i][0] if i < len(lines) else (lines[-1][0] + 1 if lines else 1)
            raise ParseError(f"expected {tag}", line=ln, section=tag.strip("$"))
        i += 1

    while i < len(lines):
        lineno, text = lines[i]
        if text == "$MeshFormat":
            i += 1
            ver = lines[i][1].split() if i < len(lines) else []
            if not ver or not ver[0].startswith("2"):
                raise ParseError("only MSH 2.x ASCII is supported", line=lineno,
                                 section="MeshFormat")
            if len(ver) > 1 and ver[1] != "0":
                raise ParseError("binary MSH is not supported", line=lines[i][0],
                                 section="MeshFormat")
            i += 1
            expect("$EndMeshFormat")
        elif text == "$Nodes":
            i += 1
            try:
                n = int(lines[i][1])
            except (IndexError, ValueError):
                raise ParseError("bad node count", line=lineno + 1, section="Nodes") from None
            i += 1
            for _ in range(n):
                if i >= len(lines):
                    raise ParseError("truncated node list", section="Nodes")
                ln, t = lines[i]
                p = t.split()
                try:
                    nodes[int(p[0])] = (float(p[1]), float(p[2]))
                except (IndexError, ValueError):
                    raise ParseError("malformed node", line=ln, section="Nodes") from None
                i += 1
            expect("$EndNodes")
        elif text == "$Elements":
            i += 1
            try:
                n = int(lines[i][1])
            except (IndexError, ValueError):
                raise ParseError("bad element count", line=lineno + 1,
                                 section="Elements") from None
            i += 1
            for _ in range(n):
                if i >= len(lines):
                    raise ParseError("truncated element list", section="Elements")
                ln, t = lines[i]
                try:
                    p = [int(v) for v in t.split()]
                    etype, ntags = p[1], p[2]
                    tags = p[3:3 + ntags]
                    conn = p[3 + ntags:]
                except (IndexError, ValueError):
                    raise ParseError("malformed element", line=ln, section="Elements") from None
                phys = tags[0] if tags else 0
                if etype == 1:
                    if len(conn) != 2:
                        raise ParseError("line element needs 2 nodes", line=ln,
                                         section="Elements")
                    edges.append(conn)
                    marks.append(marker_tags.get(phys, phys) if marker_tags else phys)
                elif etype == 2:
                    if len(conn) != 3:
                        raise ParseError("triangle needs 3 nodes", line=ln,
                                         section="Elements")
                    tris.append(conn)
                    if subdomain_tags is not None:
                        subs.append(subdomain_tags.get(phys, 1))
                    else:
                        subs.append(0 if phys == 1 else 1)
                i += 1
            expect("$EndElements")
        else:
            # skip unknown sections
            if text.startswith("$") and not text.startswith("$End"):
                end = "$End" + text[1:]
                while i < len(lines) and lines[i][1] != end:
                    i += 1
                if i >= len(lines):
                    raise ParseError(f"unterminated section {text}", line=lineno,
                                     section=text[1:])
            i += 1
    if not nodes:
        raise ParseError("no $Nodes section", section="Nodes")
    ids = sorted(nodes)
    index = {k: j for j, k in enumerate(ids)}
    verts = np.array([nodes[k] for k in ids])
    try:
        tri = np.array([[index[v] for v in t] for t in tris], dtype=np.int64).reshape(-1, 3)
        edg = np.array([[index[v] for v in e] for e in edges], dtype=np.int64).reshape(-1, 2)
    except KeyError as exc:
        raise ParseError(f"element references unknown node {exc.args[0]}",
                         section="Elements") from None
    # orient counter-clockwise
    if len(tri):
        p = verts[tri]
        s = ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
             - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0]))
        flip = s < 0
        tri[flip] = tri[flip][:, [0, 2, 1]]
    marks = [int(Marker(m)) if m in Marker._value2member_map_ else int(m) for m in marks]
    return Mesh(verts, tri, np.array(subs, dtype=np.int8), edg, np.array(marks, dtype=np.int8))
