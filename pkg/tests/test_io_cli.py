import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from csflab.cli import main
from csflab.curve import InitialCurveSpec, build_initial_curve
from csflab.flow import FlowConfig, run
from csflab.io import (
    SceneError,
    canonical_json,
    parse_scene,
    read_report,
    read_trace_csv,
    svg_frame,
    to_jsonable,
    write_report,
    write_trace_csv,
)
from csflab.verify import CheckReport

SCENES = Path(__file__).resolve().parent.parent / "scenes"


def small_scene(tmp_path, name="s", checks=("harnack_bounds",), **flow):
    scene = {
        "version": 1,
        "initial": {"generator": "bent_line", "n": 201, "params": {"round_radius": 0.5}},
        "flow": {"t_end": 0.2, "dt_factor": 1.0, "record_times": [0.1, 0.2], **flow},
        "checks": list(checks),
        "outputs": {"directory": str(tmp_path / f"out_{name}"), "formats": ["csv", "svg", "json"]},
    }
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps(scene, indent=2))
    return path, Path(scene["outputs"]["directory"])


# ---------------------------------------------------------------------------
# scene parsing


def test_malformed_json_reports_line_and_column():
    with pytest.raises(SceneError) as info:
        parse_scene('{\n  "version": 1,\n  "initial": {,\n}', "bad.json")
    assert info.value.line == 3
    assert str(info.value).startswith("bad.json:3:")


def test_unknown_key_is_located():
    text = '{\n  "version": 1,\n  "initial": {"generator": "wedge"},\n  "flow": {"t_end": 1, "speed": 2}\n}'
    with pytest.raises(SceneError) as info:
        parse_scene(text)
    assert info.value.line == 4
    assert "speed" in str(info.value)


def test_scene_semantic_errors():
    base = {"version": 1, "initial": {"generator": "wedge"}, "flow": {"t_end": 1, "dt": 1e-3, "dt_factor": 1}}
    with pytest.raises(SceneError, match="either dt or dt_factor"):
        parse_scene(json.dumps(base))
    base["flow"] = {"t_end": 1, "record_times": [0.5, 0.5]}
    with pytest.raises(SceneError, match="increasing"):
        parse_scene(json.dumps(base))
    base["flow"] = {"t_end": 1}
    base["version"] = 2
    with pytest.raises(SceneError):
        parse_scene(json.dumps(base))


def test_scene_digest_ignores_formatting():
    a = parse_scene('{"version": 1, "initial": {"generator": "wedge"}, "flow": {"t_end": 1}}')
    b = parse_scene('{\n "flow": {"t_end": 1},\n "initial": {"generator": "wedge"}, "version": 1}')
    assert a.digest == b.digest


@pytest.mark.parametrize("path", sorted(SCENES.glob("*.json")), ids=lambda p: p.stem)
def test_shipped_scenes_validate(path):
    scene = parse_scene(path.read_text(), str(path))
    assert scene.check_ids


# ---------------------------------------------------------------------------
# file formats


def test_trace_csv_round_trips_exactly(tmp_path):
    c = build_initial_curve(InitialCurveSpec("zigzag", n=101))
    tr = run(c, FlowConfig(dt=1e-3, n_nodes=101, t_end=0.01, record_times=(0.005,)))
    write_trace_csv(tr, tmp_path / "t.csv")
    snaps = read_trace_csv(tmp_path / "t.csv")
    assert [s["t"][0] for s in snaps] == tr.times.tolist()
    for row, snap in zip(snaps, tr.snapshots):
        assert np.array_equal(row["x"], snap.curve.points[:, 0])
        assert np.array_equal(row["psi"], snap.lift.psi)
        assert np.array_equal(row["kappa"], snap.curvature.kappa)


def test_json_handles_non_finite_values():
    assert to_jsonable({"a": math.inf, "b": np.float64(-math.inf), "c": math.nan}) == {"a": "inf", "b": "-inf", "c": "nan"}
    assert canonical_json({"b": 1, "a": 2}).index('"a"') < canonical_json({"b": 1, "a": 2}).index('"b"')


def test_report_schema_round_trip(tmp_path):
    reps = [CheckReport("harnack_bounds", "pass", 0.0, 0.01),
            CheckReport("area_control", "fail", 0.5, 0.01, {"t": 1.0, "v": 3, "w": 9}, "", {"x": math.inf})]
    write_report(reps, tmp_path / "r.json")
    back = read_report(tmp_path / "r.json")
    assert back[1]["witness"] == {"t": 1.0, "v": 3, "w": 9}
    assert back[1]["details"]["x"] == "inf"


def test_report_schema_requires_a_witness_for_violations(tmp_path):
    import jsonschema

    with pytest.raises(jsonschema.ValidationError):
        write_report([CheckReport("area_control", "fail", 0.5, 0.01)], tmp_path / "r.json")


def test_svg_frame_has_rays_and_fixed_decimals():
    c = build_initial_curve(InitialCurveSpec("wedge", n=51))
    from csflab.flow import make_snapshot

    svg = svg_frame(make_snapshot(0.0, c))
    assert svg.startswith("<svg") and svg.count("stroke-dasharray") == 2
    assert "t = 0" in svg


# ---------------------------------------------------------------------------
# command line


def test_simulate_writes_outputs(tmp_path):
    path, out = small_scene(tmp_path)
    assert main(["simulate", "--scene", str(path)]) == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["status"] == "ok" and man["recorded_times"] == [0.0, 0.1, 0.2]
    assert (out / "trace.csv").exists()
    assert len(list((out / "frames").glob("frame_*.svg"))) == 3


def test_verify_exit_codes(tmp_path):
    path, out = small_scene(tmp_path, "ok", checks=["harnack_bounds", "turning_bounds"])
    assert main(["verify", "--scene", str(path)]) == 0
    assert [r["check_id"] for r in read_report(out / "report.json")] == ["harnack_bounds", "turning_bounds"]
    path, _ = small_scene(tmp_path, "fail", checks=[{"id": "total_area_law", "tolerance": 0.0}])
    assert main(["verify", "--scene", str(path)]) == 1
    path, _ = small_scene(tmp_path, "bad", checks=["harnack_bounds"])
    path.write_text(path.read_text().replace('"bent_line"', '"blob"'))
    assert main(["verify", "--scene", str(path)]) == 2
    path, out = small_scene(tmp_path, "step", scheme="explicit")
    assert main(["verify", "--scene", str(path)]) == 3
    man = json.loads((out / "manifest.json").read_text())
    assert man["status"] == "failed" and man["recorded_times"] == [0.0]
    assert main(["verify", "--scene", str(SCENES / "circle.json"), "--out", str(tmp_path / "c"), "--strict"]) == 4
    assert main(["verify", "--scene", str(SCENES / "circle.json"), "--out", str(tmp_path / "c")]) == 0


def test_missing_scene_and_bad_pin_radius(tmp_path):
    assert main(["simulate", "--scene", str(tmp_path / "none.json")]) == 2
    path, _ = small_scene(tmp_path, t_end=5.0, record_times=[1.0])
    assert main(["simulate", "--scene", str(path)]) == 2


def test_zero_duration_scene(tmp_path):
    path, out = small_scene(tmp_path, t_end=0.0, record_times=[])
    assert main(["simulate", "--scene", str(path)]) == 0
    assert len(read_trace_csv(out / "trace.csv")) == 1


def test_reruns_are_byte_identical(tmp_path):
    path, _ = small_scene(tmp_path, checks=["harnack_bounds", "graphicality"])
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["verify", "--scene", str(path), "--out", str(a)]) == 0
    assert main(["verify", "--scene", str(path), "--out", str(b)]) == 0
    for name in ("trace.csv", "manifest.json", "report.json", "frames/frame_0002.svg"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_refine_writes_convergence(tmp_path):
    path, out = small_scene(tmp_path, checks=[])
    assert main(["simulate", "--scene", str(path), "--refine", "1"]) == 0
    conv = json.loads((out / "convergence.json").read_text())
    assert len(conv["h"]) == 2 and conv["h"][1] == pytest.approx(conv["h"][0] / 2, rel=1e-2)
    assert main(["simulate", "--scene", str(path), "--refine", "-1"]) == 2


def test_oracle_tables(tmp_path):
    assert main(["oracle", "oval", "--a", "5", "--t", "3", "--n", "100", "--out", str(tmp_path / "o.csv")]) == 0
    oval = np.loadtxt(tmp_path / "o.csv", delimiter=",", skiprows=1)
    assert oval.shape == (100, 2)
    assert main(["oracle", "reaper", "--t", "0", "--n", "50", "--out", str(tmp_path / "r.csv")]) == 0
    r = np.loadtxt(tmp_path / "r.csv", delimiter=",", skiprows=1)
    i = int(np.argmin(np.abs(r[:, 0] - math.log(2))))
    assert r[i, 0] == math.log(2) and r[i, 1] == pytest.approx(math.pi / 6)
    assert main(["oracle", "wedge", "--beta", str(math.pi / 2), "--out", str(tmp_path / "w.csv")]) == 0
    assert (tmp_path / "w.csv").read_text().splitlines()[0] == "psi,kappa_beta,x,y,D_beta"
    assert main(["oracle", "wedge", "--beta", "4", "--out", str(tmp_path / "w2.csv")]) == 2
    assert main(["oracle", "circle", "--R", "1", "--t", "0.6", "--out", str(tmp_path / "c.csv")]) == 2


def test_report_renders_pngs(tmp_path):
    path, out = small_scene(tmp_path, checks=["harnack_bounds", "turning_bounds"])
    assert main(["report", "--scene", str(path)]) == 0
    for name in ("curves.png", "functionals.png", "curvature.png", "checks.png"):
        assert (out / name).read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    assert main(["report", "--out", str(tmp_path / "empty")]) == 2


def test_console_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "csflab.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("csf ")


def test_png_format_renders_during_simulate(tmp_path):
    path, out = small_scene(tmp_path, checks=[])
    scene = json.loads(path.read_text())
    scene["outputs"]["formats"] = ["csv", "png"]
    path.write_text(json.dumps(scene))
    assert main(["simulate", "--scene", str(path)]) == 0
    assert (out / "curves.png").exists() and not (out / "frames").exists()
