import csv
import json

import pytest

from plateau_hxr.boundary_curves import exceptional_example, save_family
from plateau_hxr.cli import RunManifest, float_list, main


@pytest.fixture
def curve_file(tmp_path):
    path = tmp_path / "exceptional.json"
    save_family(exceptional_example(), path)
    return path


def _manifest(out):
    man = RunManifest.load(out / "manifest.json")
    for name in man.outputs:
        assert (out / name).exists()
    return man


def test_curve_classify(tmp_path, curve_file, capsys):
    out = tmp_path / "o"
    assert main(["curve", "classify", "--in", str(curve_file), "--out-dir", str(out)]) == 0
    assert "Exceptional height 2" in capsys.readouterr().out
    data = json.loads((out / "classify.json").read_text())
    assert data["class"] == "Exceptional" and data["height"] == 2.0
    man = _manifest(out)
    assert man.inputs == [str(curve_file)] and "curve.svg" in man.outputs


def test_curve_commands_are_deterministic(tmp_path, curve_file):
    for name in ("height", "tails"):
        a, b = tmp_path / f"{name}_a", tmp_path / f"{name}_b"
        assert main(["curve", name, "--in", str(curve_file), "--out-dir", str(a)]) == 0
        assert main(["curve", name, "--in", str(curve_file), "--out-dir", str(b)]) == 0
        assert _manifest(a).checksums == _manifest(b).checksums


def test_catenoid_table_heights_increase(tmp_path):
    out = tmp_path / "t"
    assert main(["catenoid", "table", "--d", "1,10,100", "--out-dir", str(out), "--no-iota"]) == 0
    rows = list(csv.DictReader((out / "catenoid_table.csv").open()))
    h = [float(r["h"]) for r in rows]
    assert len(rows) == 3 and h[0] < h[1] < h[2]


def test_catenoid_verify(tmp_path):
    assert main(["catenoid", "verify", "--d", "1,10", "--rho", "3,6", "--out-dir", str(tmp_path)]) == 0


def test_schedule_finite_and_validate(tmp_path):
    out = tmp_path / "s"
    assert main(["schedule", "finite", "--genus", "2", "--ends", "4", "--out-dir", str(out)]) == 0
    data = json.loads((out / "schedule.json").read_text())
    kinds = [s["kind"] for s in data["steps"]]
    assert kinds.count("PairOfPantsBridge") == 3 and kinds.count("HandlePair") == 2
    assert main(["schedule", "validate", "--in", str(out / "schedule.json"), "--out-dir", str(tmp_path / "v")]) == 0


def test_exit_codes(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["curve", "classify", "--in", str(bad), "--out-dir", str(tmp_path)]) == 2
    assert main(["curve", "classify", "--in", str(tmp_path / "missing.json")]) == 2
    assert main(["curve", "classify", "--no-such-flag"]) == 2
    assert main(["nonsense"]) == 2
    assert main(["catenoid", "verify", "--d", "1", "--rho", "3", "--tol", "1e-30",
                 "--out-dir", str(tmp_path)]) == 3


def test_float_list_accepts_pi_multiples():
    assert float_list("1, 0.5pi,pi") == pytest.approx([1.0, 1.5707963267948966, 3.141592653589793])
