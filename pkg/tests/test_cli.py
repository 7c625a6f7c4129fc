import io
import json

import numpy as np
import pytest

from metric_lie_surfaces.cli import main, read_surface_csv, write_surface_csv
from metric_lie_surfaces.model_core import make_dim4_model
from metric_lie_surfaces.special_surfaces import horizontal_plane


def run(argv):
    buf = io.StringIO()
    code = main([str(a) for a in argv], out=buf)
    return code, buf.getvalue()


def sample_to_csv(patch, path, n):
    us, vs = patch.grid(n, n)
    U, V = np.meshgrid(us, vs, indexing="ij")
    write_surface_csv(path, us, vs, patch(U, V))


@pytest.mark.parametrize("flags,first", [
    (["--c=2,2,2"], "SU2 iso_dim=6 global=false"),
    (["--family", "EKT", "--kappa", "0", "--tau", "0.5"], "Nil3 iso_dim=4 global=true"),
    (["--c=1,-1,0"], "Sol3 iso_dim=3 global=true"),
])
def test_classify(flags, first):
    code, out = run(["classify", *flags])
    assert code == 0
    assert out.splitlines()[0] == first


def test_classify_json():
    code, out = run(["classify", "--c=0,0,1", "--json"])
    info = json.loads(out)
    assert code == 0 and info["group_type"] == "Nil3" and info["family"]["killing_index"] == 3


@pytest.mark.parametrize("argv", [
    ["classify", "--c=1,2"],
    ["classify", "--c=1,2,x"],
    ["classify"],
    ["frobnicate"],
    ["classify", "--c=1,1,1", "--eps=1,-1,-1"],
])
def test_parse_errors(argv):
    assert run(argv)[0] == 1


def test_analyze_plane(tmp_path):
    u = v = np.linspace(0, 1, 11)
    U, V = np.meshgrid(u, v, indexing="ij")
    write_surface_csv(tmp_path / "p.csv", u, v, np.stack([U, V, 0 * U], -1))
    code, out = run(["analyze", "--c=0,0,0", "--in", tmp_path / "p.csv", "--tol", "1e-10"])
    assert code == 0
    worst = max(float(l.split()[2].split("=")[1]) for l in out.splitlines() if l.startswith("residual"))
    assert worst < 1e-10


def test_analyze_cylinder_fine_grid(tmp_path):
    code, _ = run(["special", "cylinder", "--family", "EKT", "--kappa", "0", "--tau", "0.5", "--r", "1",
                   "--domain", "0,0.2,0,0.2", "--n", "201", "--out", tmp_path / "cyl.csv"])
    assert code == 0
    code, out = run(["analyze", "--family", "EKT", "--kappa", "0", "--tau", "0.5",
                     "--in", tmp_path / "cyl.csv", "--tol", "1e-4"])
    assert code == 0
    assert "hu=0.001" in out


def test_non_finite_value_reports_row(tmp_path):
    u = v = np.linspace(0, 1, 6)
    U, V = np.meshgrid(u, v, indexing="ij")
    P = np.stack([U, V, 0 * U], -1)
    P[2, 3, 2] = np.nan
    write_surface_csv(tmp_path / "p.csv", u, v, P)
    code, _ = run(["analyze", "--c=0,0,0", "--in", tmp_path / "p.csv"])
    assert code == 2


def test_non_finite_value_message(tmp_path, capsys):
    u = v = np.linspace(0, 1, 6)
    U, V = np.meshgrid(u, v, indexing="ij")
    P = np.stack([U, V, 0 * U], -1)
    P[2, 3, 2] = np.inf
    write_surface_csv(tmp_path / "p.csv", u, v, P)
    run(["analyze", "--c=0,0,0", "--in", tmp_path / "p.csv"])
    err = capsys.readouterr().err
    # rows are written with u varying fastest: row 3 * 6 + 2
    assert "data row 20" in err and "line 22" in err and "column z" in err


def test_ragged_grid_is_data_error(tmp_path):
    (tmp_path / "p.csv").write_text("u,v,x,y,z\n0,0,0,0,0\n1,0,1,0,0\n0,1,0,1,0\n")
    assert run(["analyze", "--c=0,0,0", "--in", tmp_path / "p.csv"])[0] == 2


def test_reconstruct_roundtrip_with_manifest(tmp_path):
    fam = ["--family", "EKT", "--kappa", "-1", "--tau", "1"]
    run(["special", "cylinder", *fam, "--r", "1", "--domain", "0,0.98,0,0.98", "--n", "50",
         "--out", tmp_path / "cyl.csv"])
    assert run(["analyze", *fam, "--in", tmp_path / "cyl.csv", "--out", tmp_path / "data.csv"])[0] == 0
    (tmp_path / "run.json").write_text(json.dumps({
        "group": {"family": "EKT", "kappa": -1, "tau": 1}, "input": "data.csv", "output": "rec.csv",
        "mode": "from_T"}))
    code, out = run(["reconstruct", tmp_path / "run.json"])
    assert code == 0
    assert "path_gap" in out
    _, _, P0 = read_surface_csv(tmp_path / "cyl.csv")
    _, _, P1 = read_surface_csv(tmp_path / "rec.csv")
    assert np.abs(P1 - P0).max() < 1e-4


def test_dim4_reconstruction_flags(tmp_path):
    fam = ["--family", "EKT", "--kappa", "0", "--tau", "0.5"]
    run(["special", "cylinder", *fam, "--r", "1", "--domain", "0,0.98,0,0.98", "--n", "50",
         "--out", tmp_path / "cyl.csv"])
    run(["analyze", *fam, "--in", tmp_path / "cyl.csv", "--out", tmp_path / "data.csv"])
    code, _ = run(["reconstruct", *fam, "--in", tmp_path / "data.csv", "--mode", "dim4",
                   "--out", tmp_path / "rec.csv"])
    assert code == 0
    _, _, P0 = read_surface_csv(tmp_path / "cyl.csv")
    _, _, P1 = read_surface_csv(tmp_path / "rec.csv")
    assert np.abs(P1 - P0).max() < 1e-4


def test_daniel_quarter_turn_manifest(tmp_path):
    m = make_dim4_model("LKT", 0, 1)
    sample_to_csv(horizontal_plane(m, (0.0, 0.5, 0.0, 0.5)), tmp_path / "plane.csv", 41)
    fam = ["--family", "LKT", "--kappa", "0", "--tau", "1"]
    run(["analyze", *fam, "--in", tmp_path / "plane.csv", "--out", tmp_path / "data.csv"])
    (tmp_path / "run.json").write_text(json.dumps({
        "group": {"family": "LKT", "kappa": 0, "tau": 1}, "input": "data.csv", "mode": "daniel",
        "theta": float(np.pi / 2)}))
    code, out = run(["correspond", tmp_path / "run.json"])
    assert code == 0
    target = [l for l in out.splitlines() if l.startswith("target kappa")][0]
    kappa, tau, H = (float(t.split("=")[1]) for t in target.split()[1:])
    assert (kappa, tau, H) == pytest.approx((4.0, 0.0, -1.0), abs=1e-9)
    assert "product limit" in out


def test_from_angles_without_rank_fails_precondition(tmp_path):
    run(["special", "integral", "--c=-1,1,0", "--nu", f"{2 ** -0.5},{2 ** -0.5},0", "--extent", "0.2",
         "--n", "21", "--out", tmp_path / "s.csv"])
    run(["analyze", "--c=-1,1,0", "--in", tmp_path / "s.csv", "--out", tmp_path / "data.csv"])
    code, _ = run(["reconstruct", "--c=-1,1,0", "--in", tmp_path / "data.csv", "--mode", "from_angles"])
    assert code == 3


def test_tolerance_failure_is_exit_3(tmp_path):
    run(["special", "cylinder", "--family", "EKT", "--kappa", "0", "--tau", "0.5", "--r", "1",
         "--n", "11", "--out", tmp_path / "cyl.csv"])
    code, _ = run(["analyze", "--family", "EKT", "--kappa", "0", "--tau", "0.5",
                   "--in", tmp_path / "cyl.csv", "--tol", "1e-14"])
    assert code == 3


def test_runs_are_bit_identical(tmp_path):
    fam = ["--family", "EKT", "--kappa", "-1", "--tau", "1"]
    run(["special", "cylinder", *fam, "--r", "1", "--n", "30", "--out", tmp_path / "cyl.csv"])
    for k in (1, 2):
        run(["analyze", *fam, "--in", tmp_path / "cyl.csv", "--out", tmp_path / f"d{k}.csv"])
        run(["reconstruct", *fam, "--in", tmp_path / f"d{k}.csv", "--out", tmp_path / f"r{k}.csv"])
    assert (tmp_path / "d1.csv").read_bytes() == (tmp_path / "d2.csv").read_bytes()
    assert (tmp_path / "r1.csv").read_bytes() == (tmp_path / "r2.csv").read_bytes()


def test_thread_limit_env(tmp_path, monkeypatch):
    monkeypatch.setenv("MLS_THREADS", "1")
    assert run(["classify", "--c=1,1,1"])[0] == 0
    monkeypatch.setenv("MLS_THREADS", "zero")
    assert run(["classify", "--c=1,1,1"])[0] == 1


def test_special_listings():
    code, out = run(["special", "totally-geodesic", "--c=-1,1,0"])
    assert code == 0 and out.splitlines()[0] == "kind distributions" and out.count("span") == 2
    code, out = run(["special", "constant-angle", "--c=0,0,1", "--n", "4"])
    nus = [list(map(float, l.split()[1:])) for l in out.splitlines() if l.startswith("nu ")]
    assert code == 0 and len(nus) >= 4
    np.testing.assert_allclose(np.array(nus)[:, 2], 0.0)
