import json

import numpy as np
import pytest

from lapembed.cli import build_parser, run
from lapembed.geometry import bumpy_ellipsoid, icosphere, load_mesh, save_mesh, save_point_cloud


@pytest.fixture(scope="module")
def mesh_file(tmp_path_factory):
    p = tmp_path_factory.mktemp("in") / "sphere.off"
    save_mesh(icosphere(2), p)
    return p


def manifest(out):
    return json.loads((out / "manifest.json").read_text())


def test_no_args_is_usage_error(capsys):
    assert run([]) == 2
    assert "usage" in capsys.readouterr().err


def test_unknown_flag(capsys, mesh_file, tmp_path):
    assert run(["eigen", str(mesh_file), "--bogus", "--out", str(tmp_path)]) == 2
    assert run(["frobnicate"]) == 2


def test_missing_file(tmp_path, capsys):
    assert run(["eigen", str(tmp_path / "nope.off"), "--out", str(tmp_path)]) == 1
    assert "no such file" in capsys.readouterr().err


def test_laplacian_and_eigen(mesh_file, tmp_path):
    assert run(["laplacian", str(mesh_file), "--out", str(tmp_path)]) == 0
    assert (tmp_path / "laplacian.txt").exists()
    assert run(["eigen", str(mesh_file), "--count", "5", "--out", str(tmp_path)]) == 0
    rows = np.loadtxt(tmp_path / "eigenvalues.csv", delimiter=",", skiprows=1)
    assert rows.shape == (6, 4)
    np.testing.assert_allclose(rows[1:4, 2], 2.0, rtol=0.05)
    man = manifest(tmp_path)
    assert man["command"] == "eigen"
    assert len(man["inputs"]["input"]["sha256"]) == 64
    assert man["parameters"]["count"] == 5 and "seed" in man["parameters"]


def test_outputs_byte_identical(mesh_file, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert run(["eigen", str(mesh_file), "--count", "6", "--out", str(out)]) == 0
    for name in ("spectrum.txt", "eigenvalues.csv", "manifest.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_embed_writes_off(mesh_file, tmp_path):
    assert run(["embed", str(mesh_file), "--map", "eigen", "--m", "3", "--out", str(tmp_path)]) == 0
    image = load_mesh(tmp_path / "embedding.off")
    assert image.n_vertices == 162
    assert (tmp_path / "embedding.csv").read_text().startswith("phi1,phi2,phi3")


def test_embed_point_cloud(tmp_path):
    rng = np.random.default_rng(0)
    P = rng.standard_normal((200, 3))
    P /= np.linalg.norm(P, axis=1, keepdims=True)
    save_point_cloud(P, tmp_path / "c.csv", header=["x", "y", "z"])
    assert run(["embed", str(tmp_path / "c.csv"), "--map", "diffusion", "--m", "4", "--knn", "10", "--out", str(tmp_path)]) == 0
    assert not (tmp_path / "embedding.off").exists()
    assert manifest(tmp_path)["result"]["map"] == "diffusion"


def test_embed_dim_and_certify(mesh_file, tmp_path):
    assert run(["embed-dim", str(mesh_file), "--mmax", "5", "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "embed_dim.json").read_text())["m_star"] == 3
    assert run(["certify", str(mesh_file), "--epsilon", "1.0", "--dmax", "6", "--out", str(tmp_path)]) == 0
    res = manifest(tmp_path)["result"]
    assert res["passed"] and res["d"] <= 3 and res["direct_fraction_separated"] == 1.0


def test_register(tmp_path):
    mesh = bumpy_ellipsoid(2)
    perm = np.random.default_rng(0).permutation(mesh.n_vertices)
    from conftest import relabeled_copy

    save_mesh(mesh, tmp_path / "a.off")
    save_mesh(relabeled_copy(mesh, np.eye(3), perm), tmp_path / "b.off")
    assert run(["register", str(tmp_path / "a.off"), str(tmp_path / "b.off"), "--m", "6", "--out", str(tmp_path)]) == 0
    got = np.loadtxt(tmp_path / "correspondence.csv", delimiter=",", skiprows=1, dtype=int)
    assert np.mean(got[:, 1] == np.argsort(perm)) == 1.0


def test_torus_verify(tmp_path):
    assert run(["torus-verify", "--a", "1", "--b", "2.5", "--n", "2", "--grid", "32", "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "torus_report.json").read_text())
    assert rep["d"] == 6 and rep["verified"]
    assert rep["scans"]["6"]["injective"] and not rep["scans"]["5"]["injective"]
    assert (tmp_path / "torus_spectrum.csv").exists()


def test_torus_verify_bad_params(tmp_path):
    assert run(["torus-verify", "--a", "2", "--b", "1", "--out", str(tmp_path)]) == 1


def test_sphere_verify(tmp_path):
    assert run(["sphere-verify", "--n", "2", "--degree-max", "3", "--subdivisions", "3", "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "sphere_report.json").read_text())
    assert rep["verified"] and rep["mesh"]["m_star"] == 3
    assert rep["degrees"][2] == [2, 6, 5]


def test_threads_env(mesh_file, tmp_path, monkeypatch):
    monkeypatch.setenv("LAPEMBED_THREADS", "1")
    assert run(["eigen", str(mesh_file), "--count", "3", "--out", str(tmp_path)]) == 0


def test_parser_lists_subcommands():
    text = build_parser().format_help()
    for name in ("laplacian", "eigen", "embed", "embed-dim", "certify", "register", "torus-verify", "sphere-verify"):
        assert name in text
