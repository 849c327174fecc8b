import json

import numpy as np
import pytest

from mixedswe import dynamics as dyn
from mixedswe import io
from mixedswe import operators as op
from mixedswe.errors import InvalidParameterError


def test_parse_config_types():
    cfg = io.parse_config(
        """
        # comment line
        ro = 1e-3
        nsteps = 10     # inline comment
        sizes = 8, 16, 32
        zero = yes
        mesh_choice = sphere
        """
    )
    assert cfg == {"ro": 1e-3, "nsteps": 10, "sizes": [8, 16, 32], "zero": True, "mesh_choice": "sphere"}
    assert isinstance(cfg["nsteps"], int)


def test_parse_config_errors():
    with pytest.raises(InvalidParameterError):
        io.parse_config("just words without equals\n[section]\n")


def test_load_config(tmp_path):
    p = tmp_path / "a.cfg"
    p.write_text("dt = 0.5\n")
    assert io.load_config(p) == {"dt": 0.5}


def test_csv_is_byte_stable(tmp_path):
    rows = [(0.0, 1.0 / 3.0, np.float64(2.5), 1e-17)]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    io.write_diagnostics(a, rows)
    io.write_diagnostics(b, rows)
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0] == "t,energy,total_mass,max_abs_eta"
    assert [float(x) for x in lines[1].split(",")] == [0.0, 1.0 / 3.0, 2.5, 1e-17]


def test_manifest_atomic_and_json(tmp_path):
    path = tmp_path / "sub" / "manifest.json"
    io.write_manifest(path, {"a": np.float64(1.5), "b": np.arange(3), "c": (np.int64(2), True)})
    assert json.loads(path.read_text()) == {"a": 1.5, "b": [0, 1, 2], "c": [2, True]}
    assert [p.name for p in path.parent.iterdir()] == ["manifest.json"]


def test_vtk_layout(tmp_path, periodic2):
    ops = op.assemble(periodic2, f=1.0)
    rng = np.random.default_rng(0)
    s = dyn.State(rng.standard_normal(ops.dim_S), rng.standard_normal(ops.dim_V), 0.5)
    path = tmp_path / "s.vtk"
    io.write_vtk(path, ops, s)
    text = path.read_text().splitlines()
    nf = periodic2.n_face
    assert text[0] == "# vtk DataFile Version 3.0"
    assert f"POINTS {6 * nf} double" in text
    assert f"CELLS {nf} {7 * nf}" in text
    i = text.index("SCALARS eta double 1")
    eta = np.array([float(x) for x in text[i + 2 : i + 2 + 6 * nf]])
    # vertex values of the P1DG field are its coefficients
    loc = s.eta[ops.dm_V.cell_dofs]
    assert np.allclose(eta.reshape(nf, 6)[:, :3], loc, rtol=1e-11)
    assert np.allclose(eta.reshape(nf, 6)[:, 3], 0.5 * (loc[:, 0] + loc[:, 1]), rtol=1e-10)
