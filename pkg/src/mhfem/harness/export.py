"""Field and table writers: legacy VTK and CSV."""
import csv

import numpy as np

from ..errors import ParseError


def _open(path, mode="w"):
    try:
        return open(path, mode, newline="" if "b" not in mode else None)
    except OSError as exc:
        raise OSError(f"cannot open {path}: {exc.strerror}") from exc


def export_vtk(spaces, w, path, title="mhfem density", point_data=None, shift=(0.0, 0.0)):
    """Legacy ASCII VTK unstructured grid of a bi-domain P1 field.

    Points are written per subdomain, so interface vertices appear twice and
    the density jump is preserved.  The field is written as point data
    ``density``; ``point_data`` may add further global vectors by name.
    ``shift`` translates the coordinates (e.g. back to the physical frame).
    """
    w = np.asarray(w, dtype=float)
    pts = np.vstack([spaces.space0.coords, spaces.space1.coords]) + np.asarray(shift, float)
    cells = np.vstack([spaces.space0.global_cells, spaces.space1.global_cells])
    sub = np.concatenate([np.zeros(len(spaces.space0.cells), dtype=int),
                          np.ones(len(spaces.space1.cells), dtype=int)])
    fields = {"density": w}
    fields.update(point_data or {})
    with _open(path) as fh:
        fh.write("# vtk DataFile Version 2.0\n")
        fh.write(title.replace("\n", " ")[:255] + "\n")
        fh.write("ASCII\nDATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {len(pts)} double\n")
        for x, y in pts.tolist():
            fh.write(f"{x!r} {y!r} 0.0\n")
        fh.write(f"CELLS {len(cells)} {4 * len(cells)}\n")
        for a, b, c in cells:
            fh.write(f"3 {a} {b} {c}\n")
        fh.write(f"CELL_TYPES {len(cells)}\n")
        fh.write("5\n" * len(cells))
        fh.write(f"CELL_DATA {len(cells)}\nSCALARS subdomain int 1\nLOOKUP_TABLE default\n")
        fh.write("\n".join(str(int(s)) for s in sub) + "\n")
        fh.write(f"POINT_DATA {len(pts)}\n")
        for name, vals in fields.items():
            vals = np.asarray(vals, dtype=float)
            if vals.shape != (len(pts),):
                raise ValueError(f"point data {name!r} has length {len(vals)}, "
                                 f"expected {len(pts)}")
            fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            fh.write("\n".join(repr(float(v)) for v in vals) + "\n")


def read_vtk(path):
    """Minimal reader for files written by :func:`export_vtk`.

    Returns
    -------
    dict
        ``points`` (n, 3), ``cells`` (k, 3), ``cell_data`` and ``point_data``
        dicts of arrays.
    """
    with _open(path, "r") as fh:
        tokens = fh.read().split("\n")
    lines = [ln.strip() for ln in tokens]
    out = {"points": None, "cells": None, "cell_data": {}, "point_data": {}}
    i = 4
    section = None

    def take(count, start):
        vals = []
        j = start
        while len(vals) < count:
            if j >= len(lines):
                raise ParseError("unexpected end of file", line=j + 1, section=section)
            vals.extend(lines[j].split())
            j += 1
        return vals, j

    while i < len(lines):
        ln = lines[i]
        if not ln:
            i += 1
            continue
        head = ln.split()
        if head[0] == "POINTS":
            section = "POINTS"
            n = int(head[1])
            vals, i = take(3 * n, i + 1)
            out["points"] = np.array(vals, dtype=float).reshape(n, 3)
        elif head[0] == "CELLS":
            section = "CELLS"
            n = int(head[1])
            vals, i = take(int(head[2]), i + 1)
            arr = np.array(vals, dtype=np.int64).reshape(n, 4)
            if np.any(arr[:, 0] != 3):
                raise ParseError("only triangles are supported", line=i, section=section)
            out["cells"] = arr[:, 1:]
        elif head[0] == "CELL_TYPES":
            _, i = take(int(head[1]), i + 1)
        elif head[0] in ("CELL_DATA", "POINT_DATA"):
            section = head[0]
            n = int(head[1])
            target = out["cell_data" if head[0] == "CELL_DATA" else "point_data"]
            i += 1
            while i < len(lines) and lines[i].startswith("SCALARS"):
                name = lines[i].split()[1]
                vals, i = take(n, i + 2)
                target[name] = np.array(vals, dtype=float)
                while i < len(lines) and not lines[i]:
                    i += 1
        else:
            raise ParseError(f"unexpected keyword {head[0]!r}", line=i + 1, section=section)
    return out


def export_csv(rows, path, header):
    """Write ``rows`` under ``header``; floats keep their full repr."""
    with _open(path) as fh:
        wr = csv.writer(fh)
        wr.writerow(list(header))
        for row in rows:
            wr.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v
                         for v in row])


def read_csv(path):
    """Header and rows (as strings) of a CSV file."""
    with _open(path, "r") as fh:
        rd = list(csv.reader(fh))
    if not rd:
        raise ParseError("empty CSV file", line=1)
    return rd[0], rd[1:]


def write_table(levels, report, path_txt, path_csv, title=""):
    """Write an error table as aligned text and as CSV."""
    from .norms import format_table
    with _open(path_txt) as fh:
        fh.write(format_table(levels, report, title) + "\n")
    rows = []
    for k, n in enumerate(levels):
        lo = report.l2_order[k - 1] if k else None
        ho = report.h1_order[k - 1] if k else None
        rows.append([n, report.l2_error[k], "" if lo is None else lo, report.h1_semi_error[k],
                     "" if ho is None else ho])
    export_csv(rows, path_csv, ["n", "l2_error", "l2_order", "h1_semi_error", "h1_order"])
