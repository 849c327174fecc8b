import json

import pytest

from mixedswe import cli


@pytest.fixture(autouse=True)
def out_env(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "out"))
    return tmp_path / "out"


def manifest(out, name):
    return json.loads((out / name / "manifest.json").read_text())


def test_run_fplane_seed(out_env, capsys):
    assert cli.main(["run", "fplane-steady", "--seed", "7"]) == 0
    m = manifest(out_env, "fplane-steady")
    assert m["passed"]
    assert m["metrics"]["steadiness_error"]["value"] < 1e-12
    assert m["config"] == {"seed": 7}
    assert len(m["mesh_checksums"]) == 1
    assert "PASS fplane-steady.steadiness_error" in capsys.readouterr().out


def test_run_outputs_are_reproducible(tmp_path):
    for d in ("a", "b"):
        assert cli.main(["run", "fplane-steady", "--seed", "3", "--out", str(tmp_path / d)]) == 0
    for f in ("metrics.csv", "diagnostics.csv", "snapshot_001.vtk"):
        assert (tmp_path / "a" / "fplane-steady" / f).read_bytes() == (tmp_path / "b" / "fplane-steady" / f).read_bytes()


def test_run_with_config_and_mesh(tmp_path, out_env):
    cfg = tmp_path / "k.cfg"
    cfg.write_text("t_end = 0.2\nsnapshot_every = 0.1\n")
    assert cli.main(["run", "kelvin", "--config", str(cfg), "--mesh", "disk:4", "--dump-matrices"]) == 0
    m = manifest(out_env, "kelvin")
    assert m["config"]["mesh"] == "disk:4"
    assert "matrices/M_S.mtx" in m["outputs"]
    assert "snapshot_002.vtk" in m["outputs"]


def test_threshold_failure_exit_code(tmp_path, out_env, capsys):
    cfg = tmp_path / "bad.cfg"
    # a huge step on a coarse channel leaves the slope far from 3
    cfg.write_text("dt = 1.0\nt_end = 2.0\nsizes = 2, 4\n")
    assert cli.main(["run", "rossby", "--config", str(cfg)]) == 1
    err = capsys.readouterr().err
    assert "convergence_slope" in err
    assert not manifest(out_env, "rossby")["passed"]


@pytest.mark.parametrize(
    "argv",
    [
        ["bogus"],
        ["run", "nope"],
        ["run", "kelvin", "--sizes", "8,16"],
        ["run", "rossby", "--mesh", "periodic:4"],
        ["verify", "census", "--mesh", "torus:3"],
        ["verify", "census", "--mesh", "periodic"],
        ["verify", "census", "--mesh", "file:/nonexistent/mesh.txt"],
        ["run", "fplane-steady", "--threads", "0"],
    ],
)
def test_usage_errors(argv):
    assert cli.main(argv) == 2


def test_bad_config_key(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("warp = 9\n")
    assert cli.main(["run", "kelvin", "--config", str(cfg)]) == 2


def test_verify_commuting():
    assert cli.main(["verify", "commuting", "--mesh", "periodic:4", "--samples", "10"]) == 0


def test_verify_census_cylinder_fails(capsys):
    assert cli.main(["verify", "census", "--mesh", "cylinder:8,2"]) == 1
    assert "S_minus_2V" in capsys.readouterr().err


def test_spectrum(out_env):
    assert cli.main(["spectrum", "--mesh", "periodic:2"]) == 0
    m = manifest(out_env, "spectrum")
    assert m["metrics"]["zero_modes"]["value"] == 24
    assert (out_env / "spectrum" / "frequencies.csv").exists()
    assert (out_env / "spectrum" / "branches.csv").exists()


def test_mesh_generate_validate_convert(tmp_path, capsys):
    out = tmp_path / "m"
    assert cli.main(["mesh", "generate", "--mesh", "icosa:2", "--out", str(out)]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["n_face"] == 80 and info["valid"]
    assert cli.main(["mesh", "validate", str(out / "mesh.txt")]) == 0
    assert cli.main(["mesh", "convert", str(out / "mesh.txt"), str(tmp_path / "c.txt")]) == 0
    assert (tmp_path / "c.txt").read_text() == (out / "mesh.txt").read_text()
    assert cli.main(["mesh", "convert", str(out / "mesh.txt")]) == 2


def test_parallel_jobs_match_serial(tmp_path):
    args = ["run", "fplane-steady", "solid-rotation", "--mesh", "icosa:2", "--seed", "1"]
    assert cli.main(args + ["--out", str(tmp_path / "serial")]) == 0
    assert cli.main(args + ["--threads", "2", "--out", str(tmp_path / "par")]) == 0
    for name in ("fplane-steady", "solid-rotation"):
        for f in ("metrics.csv", "diagnostics.csv"):
            assert (tmp_path / "serial" / name / f).read_bytes() == (tmp_path / "par" / name / f).read_bytes()
