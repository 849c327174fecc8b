"""File output: VTK legacy snapshots, CSV tables, configs and manifests."""

from __future__ import annotations

import configparser
import csv
import json
import os
import tempfile

import numpy as np

from . import elements as el
from .errors import InvalidParameterError

# barycentric coordinates of the 6 points of a VTK quadratic triangle
_VTK_NODES = np.array(
    [
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.5, 0.5, 0.0],
        [0.0, 0.5, 0.5],
        [0.5, 0.0, 0.5],
    ]
)
VTK_QUADRATIC_TRIANGLE = 22


def _fmt(x) -> str:
    return f"{x:.12g}"


def write_vtk(path, ops, state, title="snapshot") -> None:
    """Write eta and u at cell vertices and edge midpoints.

    Points are duplicated per cell, so discontinuous fields keep all their
    values at shared locations.
    """
    mesh = ops.mesh
    fr = el.frames(mesh)
    E, S, V = ops.pair
    pts = fr.points(_VTK_NODES).reshape(-1, 3)
    eta = np.einsum("cqj,cj->cq", np.asarray(el.basis_values(V, fr, _VTK_NODES)), el.gather(ops.dm_V, state.eta))
    u = np.einsum("cqjd,cj->cqd", el.basis_values(S, fr, _VTK_NODES), el.gather(ops.dm_S, state.u))
    nf = mesh.n_face
    lines = [
        "# vtk DataFile Version 3.0",
        f"{title} t={_fmt(state.t)}",
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {len(pts)} double",
    ]
    lines += [" ".join(_fmt(v) for v in p) for p in pts]
    lines.append(f"CELLS {nf} {7 * nf}")
    lines += ["6 " + " ".join(str(6 * c + k) for k in range(6)) for c in range(nf)]
    lines.append(f"CELL_TYPES {nf}")
    lines += [str(VTK_QUADRATIC_TRIANGLE)] * nf
    lines.append(f"POINT_DATA {len(pts)}")
    lines += ["SCALARS eta double 1", "LOOKUP_TABLE default"]
    lines += [_fmt(v) for v in eta.ravel()]
    lines.append("VECTORS u double")
    lines += [" ".join(_fmt(v) for v in row) for row in u.reshape(-1, 3)]
    _atomic_write(path, "\n".join(lines) + "\n")


def write_csv(path, header, rows) -> None:
    """CSV with fixed float formatting (repr round-trips, byte-stable)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])


def write_diagnostics(path, rows) -> None:
    write_csv(path, ["t", "energy", "total_mass", "max_abs_eta"], rows)


def _coerce(text: str):
    t = text.strip()
    low = t.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    if "," in t:
        return [_coerce(p) for p in t.split(",") if p.strip()]
    for conv in (int, float):
        try:
            return conv(t)
        except ValueError:
            pass
    return t


def parse_config(text: str) -> dict:
    """Parse ``key = value`` lines (``#`` comments) into typed values."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string("[config]\n" + text)
    except configparser.Error as exc:
        raise InvalidParameterError(f"bad config: {exc}") from exc
    return {k: _coerce(v) for k, v in cp["config"].items()}


def load_config(path) -> dict:
    with open(path) as fh:
        return parse_config(fh.read())


def _atomic_write(path, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    return x


def write_manifest(path, manifest: dict) -> None:
    """Write a JSON manifest atomically."""
    _atomic_write(path, json.dumps(_jsonable(manifest), indent=2, sort_keys=True) + "\n")
