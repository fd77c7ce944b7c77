import json
import shutil
import subprocess
import sys

import numpy as np
import pytest

from roadsnake import formats
from roadsnake.cli import main
from roadsnake.synth import Scene

SMALL = ["--width", "192", "--height", "192", "--roads", "1", "--road-width-min", "40", "--road-width-max", "60"]


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def tree_bytes(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.fixture(scope="module")
def scenes(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli") / "scenes"
    assert main(["generate", "--count", "2", "--seed", "4", "--out", str(root), *SMALL]) == 0
    assert main(["gtfeat", str(root)]) == 0
    return root


class TestGenerate:
    def test_layout_and_manifest(self, scenes):
        manifest = formats.read_json(scenes / "manifest.json")
        assert manifest["scenes"] == ["scene_000004", "scene_000005"]
        for name in manifest["scenes"]:
            d = scenes / name
            assert (d / "annotations.json").exists() and (d / "scene.json").exists()
            for r in Scene.RASTERS:
                assert (d / f"{r}.f32").exists() and (d / f"{r}.json").exists()
            assert formats.read_json(d / "scene.json")["seed"] == int(name[-6:])

    def test_deterministic(self, tmp_path, capsys):
        for k in ("a", "b"):
            assert run(capsys, "generate", "--count", "2", "--seed", "9", "--out", tmp_path / k, *SMALL)[0] == 0
        assert tree_bytes(tmp_path / "a") == tree_bytes(tmp_path / "b")

    def test_count_zero(self, tmp_path, capsys):
        code, out, _ = run(capsys, "generate", "--count", "0", "--out", tmp_path / "none")
        assert code == 0 and json.loads(out)["scenes"] == []

    def test_unwritable(self, tmp_path, capsys):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        code, _, err = run(capsys, "generate", "--out", blocker / "sub", *SMALL)
        assert code == 2 and "cannot create" in err

    def test_bad_config_value(self, tmp_path, capsys):
        code, _, err = run(capsys, "generate", "--out", tmp_path / "x", "--width", "50")
        assert code == 1 and "SceneConfig" in err

    def test_config_file_and_flag_precedence(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"scene": {"width": 160, "height": 176, "roads": 1,
                                             "road_width_min": 40, "road_width_max": 50}}))
        assert run(capsys, "generate", "--config", cfg, "--height", "200", "--out", tmp_path / "s")[0] == 0
        sc = formats.read_json(tmp_path / "s" / "scene_000000" / "scene.json")
        assert (sc["width"], sc["height"]) == (160, 200)

    def test_unknown_config_key(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"lanes": 3}))
        code, _, err = run(capsys, "generate", "--config", cfg, "--out", tmp_path / "s")
        assert code == 1 and "lanes" in err


class TestFeatures:
    def test_gtfeat_unit_or_zero(self, scenes):
        f = formats.read_features(scenes / "scene_000004", "gt")
        mag = np.hypot(*f.direction)
        assert np.all((mag == 0) | (np.abs(mag - 1) < 1e-5))
        assert f.detection.max() == 1.0

    def test_degrade_zero_config_matches_gt(self, scenes, tmp_path, capsys):
        cfg = tmp_path / "zero.json"
        cfg.write_text(json.dumps({"degrade": {"endpoint_jitter": 0}}))
        assert run(capsys, "degrade", "--config", cfg, scenes)[0] == 0
        d = scenes / "scene_000004"
        for name in formats.FEATURE_NAMES:
            assert (d / f"{name}.deg.f32").read_bytes() == (d / f"{name}.gt.f32").read_bytes()

    def test_degrade_deterministic(self, scenes, capsys):
        d = scenes / "scene_000005"
        args = ("degrade", "--seed", "3", "--blur-sigma", "2", "--gap-count", "1", "--direction-noise", "10", scenes)
        assert run(capsys, *args)[0] == 0
        first = {n: (d / f"{n}.deg.f32").read_bytes() for n in formats.FEATURE_NAMES}
        assert run(capsys, *args)[0] == 0
        assert first == {n: (d / f"{n}.deg.f32").read_bytes() for n in formats.FEATURE_NAMES}
        assert first["detection"] != (d / "detection.gt.f32").read_bytes()

    def test_missing_annotations(self, tmp_path, capsys):
        (tmp_path / "empty").mkdir()
        code, _, err = run(capsys, "gtfeat", tmp_path / "empty")
        assert code == 1 and "annotations.json" in err


class TestTraceAndBaseline:
    def test_trace_gt_two_boundaries(self, scenes, capsys):
        code, out, _ = run(capsys, "trace", "--features", "gt", scenes)
        assert code == 0 and "trace.gt.json" in out
        for name in ("scene_000004", "scene_000005"):
            polys = formats.read_polylines(scenes / name / "trace.gt.json")
            gts = formats.read_polylines(scenes / name / "annotations.json")
            assert len(gts) == 2 and len(polys) == 2
            assert all(p.score is not None and p.score >= 0.4 for p in polys)

    def test_missing_feature_file(self, scenes, tmp_path, capsys):
        d = tmp_path / "scene"
        shutil.copytree(scenes / "scene_000004", d)
        (d / "direction.gt.f32").unlink()
        code, _, err = run(capsys, "trace", "--features", "gt", d)
        assert code == 1 and "direction.gt.f32" in err

    def test_dimension_mismatch(self, scenes, tmp_path, capsys):
        d = tmp_path / "scene"
        shutil.copytree(scenes / "scene_000004", d)
        formats.write_raster(d / "endpoints.gt", np.zeros((40, 40)))
        code, _, err = run(capsys, "trace", "--features", "gt", d)
        assert code == 1 and "dimension" in err.lower()

    def test_baseline_sweep(self, scenes, capsys):
        code, out, _ = run(capsys, "baseline", "--features", "gt", "--sweep", scenes)
        assert code == 0
        assert "selected threshold:" in out
        rows = [l for l in out.splitlines() if l.strip() and l.strip()[0].isdigit() and "polylines" not in l]
        assert len(rows) == 10
        assert (scenes / "scene_000004" / "baseline.gt.json").exists()


class TestEval:
    def test_perfect_single_file(self, scenes, tmp_path, capsys):
        ann = scenes / "scene_000004" / "annotations.json"
        code, out, _ = run(capsys, "eval", "--pred", ann, "--gt", ann, "--out", tmp_path / "r")
        assert code == 0
        head, vals = out.strip().splitlines()
        assert head.split()[-1] == "Conn"
        assert set(vals.split()) == {"100.0"}
        rep = formats.read_json(tmp_path / "r.json")
        assert rep["connectivity"] == 1.0
        lines = (tmp_path / "r.csv").read_text().splitlines()
        assert lines[0] == "tau,precision,recall,f1" and len(lines) == 5

    def test_trace_beats_baseline_connectivity(self, scenes, tmp_path, capsys):
        assert run(capsys, "degrade", "--seed", "1", "--blur-sigma", "2", "--gap-count", "2",
                   "--direction-noise", "10", scenes)[0] == 0
        assert run(capsys, "trace", scenes)[0] == 0
        assert run(capsys, "baseline", "--threshold", "0.9", scenes)[0] == 0
        for name in ("trace.deg.json", "baseline.deg.json"):
            assert run(capsys, "eval", scenes, "--pred", name, "--out", tmp_path / name[:-5])[0] == 0
        t = formats.read_json(tmp_path / "trace.deg.json")
        b = formats.read_json(tmp_path / "baseline.deg.json")
        assert t["connectivity"] >= b["connectivity"]
        assert [s["scene"] for s in t["per_scene"]] == ["scene_000004", "scene_000005"]

    def test_malformed_json(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{"polylines": [\n  {"vertices": [[0, 0], [1, 1]],,}\n]}')
        code, _, err = run(capsys, "eval", "--pred", bad, "--gt", bad)
        assert code == 1 and "line 2" in err

    def test_empty_gt(self, tmp_path, capsys):
        gt = tmp_path / "gt.json"
        gt.write_text(json.dumps({"polylines": []}))
        code, _, err = run(capsys, "eval", "--pred", gt, "--gt", gt)
        assert code == 1 and "no boundaries" in err

    def test_bad_thresholds(self, scenes, capsys):
        ann = scenes / "scene_000004" / "annotations.json"
        assert run(capsys, "eval", "--pred", ann, "--gt", ann, "--thresholds", "2,-1")[0] == 1


class TestPlot:
    def test_outputs(self, scenes, tmp_path, capsys):
        ann = scenes / "scene_000005" / "annotations.json"
        trace = scenes / "scene_000005" / "trace.gt.json"
        if not trace.exists():
            assert run(capsys, "trace", "--features", "gt", scenes)[0] == 0
        assert run(capsys, "eval", "--pred", ann, "--gt", ann, "--out", tmp_path / "perfect")[0] == 0
        assert run(capsys, "eval", "--pred", trace, "--gt", ann, "--out", tmp_path / "csnake")[0] == 0
        code, out, _ = run(capsys, "plot", tmp_path / "perfect.json", tmp_path / "csnake.json",
                           "--out", tmp_path / "fig")
        assert code == 0
        fig = tmp_path / "fig"
        for name in ("connectivity_cdf.svg", "connectivity_cdf.csv", "prf.svg", "prf.csv"):
            assert (fig / name).exists()
        svg = (fig / "connectivity_cdf.svg").read_text()
        assert svg.lstrip().startswith("<?xml") and "perfect" in svg and "csnake" in svg
        prf = (fig / "prf.csv").read_text().strip().splitlines()
        assert len(prf) == 1 + 2 * 4
        cdf = (fig / "connectivity_cdf.csv").read_text().strip().splitlines()[1:]
        for series in ("perfect", "csnake"):
            vals = [float(r.split(",")[-1]) for r in cdf if r.startswith(series)]
            assert vals == sorted(vals)

    def test_plot_deterministic(self, scenes, tmp_path, capsys):
        ann = scenes / "scene_000005" / "annotations.json"
        assert run(capsys, "eval", "--pred", ann, "--gt", ann, "--out", tmp_path / "r")[0] == 0
        for k in ("a", "b"):
            assert run(capsys, "plot", tmp_path / "r.json", "--out", tmp_path / k)[0] == 0
        assert tree_bytes(tmp_path / "a") == tree_bytes(tmp_path / "b")

    def test_no_reports(self, capsys):
        code, _, err = run(capsys, "plot")
        assert code == 1 and "no report" in err

    def test_missing_report(self, tmp_path, capsys):
        assert run(capsys, "plot", tmp_path / "nope.json")[0] == 1


def test_console_script(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "roadsnake.cli", "generate", "--count", "1",
                           "--out", str(tmp_path / "s"), *SMALL], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout)["count"] == 1
    proc = subprocess.run([sys.executable, "-m", "roadsnake.cli", "nonsense"], capture_output=True, text=True)
    assert proc.returncode != 0
