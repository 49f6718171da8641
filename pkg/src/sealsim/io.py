"""Output writers: time-series CSV, legacy VTK pressure snapshots, JSON records."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, is_dataclass
from pathlib import Path

import numpy as np

from .model import TimeSeriesRecord
from .reynolds import PressureField

CSV_HEADER = TimeSeriesRecord.CSV_HEADER
VTK_QUAD = 9


def write_timeseries(path, records) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for rec in records:
            w.writerow([repr(float(v)) if isinstance(v, float) else v for v in rec.row()])
    return path


def read_timeseries(path) -> dict[str, np.ndarray]:
    with Path(path).open() as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array(body, dtype=float).reshape(len(body), len(header))
    return {name: data[:, k] for k, name in enumerate(header)}


def write_vtk(path, field: PressureField, title: str = "sealsim pressure") -> Path:
    """Write the pressure field as an ASCII legacy VTK unstructured grid."""
    disc = field.disc
    xy = disc.node_xy
    path = Path(path)
    lines = ["# vtk DataFile Version 3.0", title.replace("\n", " ")[:255], "ASCII", "DATASET UNSTRUCTURED_GRID"]
    lines.append(f"POINTS {len(xy)} double")
    lines.extend(f"{float(x)!r} {float(y)!r} 0.0" for x, y in xy)
    n_cells = len(disc.conn)
    lines.append(f"CELLS {n_cells} {5 * n_cells}")
    lines.extend("4 " + " ".join(str(int(i)) for i in row) for row in disc.conn)
    lines.append(f"CELL_TYPES {n_cells}")
    lines.extend([str(VTK_QUAD)] * n_cells)
    lines.append(f"POINT_DATA {len(xy)}")
    lines.append("SCALARS pressure double 1")
    lines.append("LOOKUP_TABLE default")
    lines.extend(repr(float(v)) for v in field.values)
    lines.append(f"CELL_DATA {n_cells}")
    lines.append("SCALARS level int 1")
    lines.append("LOOKUP_TABLE default")
    lines.extend(str(int(v)) for v in field.mesh.levels(disc.cells))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_vtk(path) -> dict:
    """Minimal reader for files produced by :func:`write_vtk`."""
    tokens = Path(path).read_text().split("\n")
    out: dict = {"title": tokens[1]}
    i = 4
    while i < len(tokens):
        line = tokens[i].split()
        i += 1
        if not line:
            continue
        if line[0] == "POINTS":
            n = int(line[1])
            out["points"] = np.array([tokens[i + k].split() for k in range(n)], dtype=float)
            i += n
        elif line[0] == "CELLS":
            n = int(line[1])
            out["cells"] = np.array([tokens[i + k].split()[1:] for k in range(n)], dtype=int)
            i += n
        elif line[0] == "CELL_TYPES":
            n = int(line[1])
            out["cell_types"] = np.array(tokens[i : i + n], dtype=int)
            i += n
        elif line[0] == "SCALARS":
            name = line[1]
            n = len(out["cells"]) if out.get("_section") == "cell" else len(out["points"])
            out[name] = np.array(tokens[i + 1 : i + 1 + n], dtype=float)
            i += n + 1
        elif line[0] == "POINT_DATA":
            out["_section"] = "point"
        elif line[0] == "CELL_DATA":
            out["_section"] = "cell"
    out.pop("_section", None)
    return out


def _plain(obj):
    if is_dataclass(obj):
        return asdict(obj)
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def write_json(path, payload) -> Path:
    path = Path(path)
    path.write_text(json.dumps(payload, indent=2, default=_plain) + "\n")
    return path
