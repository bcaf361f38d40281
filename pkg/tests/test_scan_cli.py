import json
import subprocess
import sys

import numpy as np
import pytest
from scipy import ndimage

from ksatlas.cli import main
from ksatlas.locking import six_states
from ksatlas.model import MeanZeroBasis, project
from ksatlas.scan import ScanGrid, ScanMode, connected_components, contact_fraction, scan, stable_component

BASIS3 = MeanZeroBasis.for_size(3)


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(path):
    lines = path.read_text(encoding="utf-8").split("\n")
    assert lines[0].startswith("# ")
    meta = json.loads(lines[0][2:])
    header = lines[1].split(",")
    rows = [list(map(float, ln.split(","))) for ln in lines[2:] if ln]
    return meta, header, np.array(rows)


def test_grid_layout():
    g = ScanGrid(alpha=0.0, resolution=5, x_range=(-1, 1), y_range=(0, 2))
    c = g.coords()
    assert c.shape == (5, 5, 2)
    np.testing.assert_array_equal(c[0, :, 0], np.linspace(-1, 1, 5))
    np.testing.assert_array_equal(c[:, 0, 1], np.linspace(0, 2, 5))
    assert g.nearest_index((0.0, 0.0)) == (0, 2)
    np.testing.assert_allclose(g.thetas().sum(axis=-1), 0.0, atol=1e-14)


def test_scan_modes_small():
    g = ScanGrid(alpha=np.pi / 6, resolution=41)
    origin = g.nearest_index((0.0, 0.0))
    idx = scan(g, "index")
    assert idx.values[origin] == 0
    mod2 = scan(g, ScanMode.MOD2)
    ok = mod2.values >= 0
    assert np.all(mod2.values[ok] == idx.values[ok] % 2)
    sd = scan(g, "sdagger")
    assert sd.values[origin] == 1
    assert np.all(idx.values[sd.values == 1] == 0)
    surf = scan(g, "surface")
    assert surf.values.shape == (41, 41, 4)
    np.testing.assert_array_equal(surf.values[..., -1], idx.values)
    assert surf.columns == ["x", "y", "omega1", "omega2", "omega3", "n_plus"]


def test_twist_points_have_index_two():
    a = 0.0
    g = ScanGrid(alpha=a, resolution=401)
    idx = scan(g, "index").values
    for st in six_states(a)[1:3]:
        assert idx[g.nearest_index(project(st.theta.theta, BASIS3))] == 2


def test_components_and_contact():
    mask = np.zeros((6, 6), dtype=bool)
    mask[0, 0] = mask[0, 1] = mask[2, 2] = mask[3, 3] = True
    _, count = connected_components(mask)
    assert count == 3  # diagonal neighbours are separate under 4-connectivity
    m = np.array([[0, 0, 2], [0, 0, 1], [1, 1, 1]])
    assert stable_component(m, (0, 0)).sum() == 4
    assert contact_fraction(m, (0, 0)) == pytest.approx(1 / 3)


@pytest.mark.parametrize("alpha", [0.0, np.pi / 6, np.pi / 3])
def test_stable_region_touches_index_two_at_points_only(alpha):
    # point contacts: the number of touching cells must not grow with resolution
    touching = []
    for res in (400, 800):
        g = ScanGrid(alpha=alpha, resolution=res)
        idx = scan(g, "index").values
        comp = stable_component(idx, g.nearest_index((0.0, 0.0)))
        boundary = comp.sum() - ndimage.binary_erosion(comp).sum()
        touching.append(round(contact_fraction(idx, g.nearest_index((0.0, 0.0))) * boundary))
    assert max(touching) <= 4


def test_classify_origin(capsys):
    code, out, _ = run_cli(capsys, "classify", "--theta", "0,0,0", "--alpha", "0.3")
    assert code == 0
    rep = json.loads(out)
    assert rep["spectral"]["class"] == "Stable"
    assert rep["index_certificate"]["verdict"] == "ConsistentParity"
    assert rep["s_dagger"] is True and rep["lock"]["locked"] is True


def test_classify_twist(capsys):
    th = ",".join(repr(x) for x in (0.0, 2 * np.pi / 3, 4 * np.pi / 3))
    code, out, _ = run_cli(capsys, "classify", "--theta", th, "--alpha", "0")
    rep = json.loads(out)
    assert code == 0 and rep["spectral"]["class"] == "Unstable(2)"
    assert rep["index_certificate"]["verdict"] == "Inapplicable"


@pytest.mark.parametrize(
    "argv",
    [
        ["classify", "--theta", "0,abc", "--alpha", "0.1"],
        ["classify", "--theta", "0,0", "--alpha", "2.0"],
        ["classify", "--theta", "0,0", "--alpha", "0.1", "--omega", "1"],
        ["classify", "--theta", "0", "--alpha", "0.1"],
        ["volume", "--n-list", "1..3", "--strata", "2", "--samples", "4"],
        ["scan", "--alpha", "0", "--resolution", "1"],
    ],
)
def test_usage_errors_exit_two(capsys, argv):
    code, _, err = run_cli(capsys, *argv)
    assert code == 2 and "error" in err


def test_argparse_errors_exit_two():
    res = subprocess.run([sys.executable, "-m", "ksatlas.cli", "scan"], capture_output=True)
    assert res.returncode == 2


def test_io_error_exit_four(capsys, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code, _, _ = run_cli(capsys, "scan", "--alpha", "0", "--resolution", "3", "--out", str(blocker / "a.csv"))
    assert code == 4


def test_states(capsys):
    code, out, _ = run_cli(capsys, "states", "--alpha", repr(np.pi / 6))
    rep = json.loads(out)
    assert code == 0
    assert rep["phi"] == pytest.approx(-0.380251, abs=1e-6)
    assert abs(rep["functional_equation_residual"]) <= 1e-12
    assert len(rep["states"]) == 6
    assert all(s["lock"]["locked"] for s in rep["states"])
    assert rep["states"][0]["spectral"]["class"] == "Stable"


def test_scan_csv_and_rerun_identical(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("KSATLAS_OUTPUT_DIR", str(tmp_path))
    code, out, _ = run_cli(capsys, "scan", "--alpha", "0.5", "--resolution", "21", "--mode", "mod2")
    assert code == 0
    path = tmp_path / out.strip().split("/")[-1]
    first = path.read_bytes()
    meta, header, rows = read_csv(path)
    assert meta["command"] == "scan" and meta["parameters"]["mode"] == "mod2"
    assert header == ["x", "y", "value"] and rows.shape == (441, 3)
    assert b"\r" not in first
    assert (tmp_path / (path.name + ".manifest.json")).exists()
    run_cli(capsys, "scan", "--alpha", "0.5", "--resolution", "21", "--mode", "mod2")
    assert path.read_bytes() == first


def test_volume_csv(capsys, tmp_path):
    out = tmp_path / "vol.csv"
    argv = ["volume", "--n-list", "3..5", "--alpha-list", "0,0.5", "--strata", "10", "--samples", "2000", "--out", str(out)]
    code, stdout, _ = run_cli(capsys, *argv)
    assert code == 0 and "rho=" in stdout
    first = out.read_bytes()
    meta, header, rows = read_csv(out)
    assert meta["seed"] == 0
    assert header[:3] == ["n", "alpha", "volume"]
    assert rows.shape == (6, len(header))
    np.testing.assert_array_equal(rows[rows[:, 1] == 0, header.index("rescaled")], 1.0)
    run_cli(capsys, *argv)
    assert out.read_bytes() == first
    run_cli(capsys, *argv[:-2], "--workers", "3", "--out", str(out))
    assert out.read_bytes() == first
