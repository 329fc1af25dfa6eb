import json
import subprocess
import sys

import numpy as np
import pytest
from PIL import Image

from tfg.cli import main
from tfg.detect import LANDMARK_COLOURS
from tfg.imgseq import load_sequence
from tfg.segment import rle_to_mask

SMALL_RING = {"type": "ring", "width": 48, "height": 48, "mean_radius": 12,
              "wall_thickness": 6, "amplitude": 2, "frames": 24, "speckle_contrast": 0.2}
FAST = ["--pyramid-levels", "2", "--iterations-per-level", "40"]


def _phantom(tmp_path, name="ph", **overrides):
    doc = dict(SMALL_RING, **overrides)
    spec = tmp_path / f"{name}.json"
    spec.write_text(json.dumps(doc))
    assert main(["phantom", str(spec), "-o", str(tmp_path / name)]) == 0
    return tmp_path / name


def test_phantom_pendulum_outputs(tmp_path):
    spec = tmp_path / "p.json"
    spec.write_text(json.dumps({"type": "pendulum", "frames": 12}))
    assert main(["phantom", str(spec), "-o", str(tmp_path / "out")]) == 0
    assert (tmp_path / "out" / "ground_truth.json").is_file()
    assert len(list((tmp_path / "out" / "frames").glob("*.png"))) == 12
    seq = load_sequence(tmp_path / "out" / "sequence.tfgs")
    assert len(seq) == 12 and seq.fps == 29


def test_phantom_ring_pause_in_ground_truth(tmp_path):
    out = _phantom(tmp_path, pause=[5, 10])
    doc = json.loads((out / "ground_truth.json").read_text())
    assert doc["pause"]["start"] == 5 and doc["pause"]["length"] == 10


def test_phantom_seed_override(tmp_path):
    spec = tmp_path / "s.json"
    spec.write_text(json.dumps(dict(SMALL_RING, frames=3)))
    main(["phantom", str(spec), "-o", str(tmp_path / "a"), "--seed", "4"])
    doc = json.loads((tmp_path / "a" / "ground_truth.json").read_text())
    assert doc["spec"]["rng_seed"] == 4


def test_phantom_malformed_json(tmp_path, capsys):
    spec = tmp_path / "bad.json"
    spec.write_text("{not json")
    assert main(["phantom", str(spec), "-o", str(tmp_path / "o")]) == 2
    assert "malformed" in capsys.readouterr().err


def test_phantom_invalid_spec(tmp_path, capsys):
    spec = tmp_path / "bad.json"
    spec.write_text(json.dumps({"type": "ring", "amplitude": 50}))
    assert main(["phantom", str(spec), "-o", str(tmp_path / "o")]) == 2
    assert "invalid spec" in capsys.readouterr().err


def test_nonexistent_input(tmp_path):
    assert main(["pause", str(tmp_path / "missing"), "-o", str(tmp_path / "o")]) == 2


def test_single_frame_sequence(tmp_path):
    d = tmp_path / "one"
    d.mkdir()
    Image.fromarray(np.zeros((16, 16), np.uint8)).save(d / "f0.png")
    assert main(["landmarks", str(d), "-o", str(tmp_path / "o")]) == 2


def test_bad_parameter_is_usage_error(tmp_path):
    out = _phantom(tmp_path, frames=3)
    assert main(["region", str(out / "sequence.tfgs"), "-o", str(tmp_path / "r"),
                 "--scale-factor", "1.5"]) == 2


def test_unknown_flag_is_usage_error(tmp_path):
    assert main(["pause", "x", "-o", "y", "--no-such-flag"]) == 2


def test_segmentation_failure_exit_1(tmp_path):
    out = _phantom(tmp_path, frames=3)
    assert main(["region", str(out / "sequence.tfgs"), "-o", str(tmp_path / "r"),
                 "--seg-threshold", "1.0"]) == 1


def test_static_sequence_pause_spans_signal(tmp_path):
    d = tmp_path / "static"
    d.mkdir()
    img = np.zeros((32, 32), np.uint8)
    img[8:24, 8:24] = 200
    for i in range(20):
        Image.fromarray(img).save(d / f"f{i:02d}.png")
    assert main(["pause", str(d), "-o", str(tmp_path / "p")] + FAST) == 0
    doc = json.loads((tmp_path / "p" / "pause_report.json").read_text())
    # 19 TFG samples give 12 windows, all of zero variance
    assert doc["intervals"] == [{"start": 0, "length": 12, "seconds": 12 / 29,
                                 "classification": "missing_beats"}]
    assert doc["config"]["fps"] == 29.0


def test_pause_outputs(tmp_path):
    out = _phantom(tmp_path)
    res = tmp_path / "p"
    assert main(["pause", str(out / "sequence.tfgs"), "-o", str(res)] + FAST) == 0
    tfg_rows = (res / "tfg.csv").read_text().splitlines()
    assert tfg_rows[0] == "frame,value" and len(tfg_rows) == 24
    stv_rows = (res / "stv.csv").read_text().splitlines()
    assert len(stv_rows) == 1 + 23 - 8 + 1
    plot = (res / "pause_plot.csv").read_text().splitlines()
    assert plot[0] == "frame,tfg,stv,paused" and len(plot) == 24
    doc = json.loads((res / "pause_report.json").read_text())
    cfg = doc["config"]
    assert cfg["window"] == 8 and cfg["min_length"] == 8 and cfg["threshold"] == 0.2
    assert cfg["flow"]["pyramid_levels"] == 2 and cfg["segmentation"]["sigma"] == 1.0


def test_region_outputs_and_centroid_in_sector(tmp_path):
    out = _phantom(tmp_path, frozen_sector=[330, 30], frames=40,
                   width=64, height=64, mean_radius=16)
    res = tmp_path / "r"
    assert main(["region", str(out / "sequence.tfgs"), "-o", str(res), "--pyramid-levels", "2"]) == 0
    for name in ("mask.png", "mask.json", "variance.csv", "variance.png",
                 "abnormal_overlay.png", "abnormal_mask.png", "region.json"):
        assert (res / name).is_file()
    doc = json.loads((res / "region.json").read_text())
    gt = json.loads((out / "ground_truth.json").read_text())
    sector = rle_to_mask(gt["frozen_sector"]["mask"])
    assert doc["abnormal_count"] > 0
    cx, cy = doc["abnormal_centroid"]
    # centroid lies inside the wedge that contains the sector
    ang = np.degrees(np.arctan2(cy - 31.5, cx - 31.5)) % 360
    assert ang > 330 or ang < 30
    assert sector.any()
    assert doc["config"]["rel_threshold"] == 0.2
    overlay = np.asarray(Image.open(res / "abnormal_overlay.png"))
    assert overlay.shape == (64, 64, 3)


def test_region_healthy_phantom_is_empty(tmp_path):
    out = _phantom(tmp_path, frames=40, width=64, height=64, mean_radius=16)
    res = tmp_path / "r"
    assert main(["region", str(out / "sequence.tfgs"), "-o", str(res), "--pyramid-levels", "2"]) == 0
    doc = json.loads((res / "region.json").read_text())
    assert doc["abnormal_count"] == 0 and doc["abnormal_centroid"] is None


def test_landmarks_outputs(tmp_path):
    out = _phantom(tmp_path)
    res = tmp_path / "l"
    assert main(["landmarks", str(out / "frames"), "-o", str(res)] + FAST) == 0
    doc = json.loads((res / "landmarks.json").read_text())
    roles = [lm["role"] for lm in doc["landmarks"]]
    assert sorted(roles) == sorted(LANDMARK_COLOURS)
    for lm in doc["landmarks"]:
        assert lm["colour"] == LANDMARK_COLOURS[lm["role"]]
    img = np.asarray(Image.open(res / "landmarks.png").convert("RGB"))
    v1 = next(lm for lm in doc["landmarks"] if lm["role"] == "valve_1")
    assert tuple(img[v1["y"], v1["x"]]) == (0, 255, 255)


def test_tfg_and_flow_outputs(tmp_path):
    out = _phantom(tmp_path, frames=6)
    assert main(["tfg", str(out / "sequence.tfgs"), "-o", str(tmp_path / "t"),
                 "--point", "24", "12", "--mode", "tracked"] + FAST) == 0
    doc = json.loads((tmp_path / "t" / "tfg.json").read_text())
    assert doc["config"]["point"] == [24, 12] and doc["samples"] == 5
    assert main(["flow", str(out / "sequence.tfgs"), "-o", str(tmp_path / "f"),
                 "--pair", "2"] + FAST) == 0
    rows = (tmp_path / "f" / "flow_0002.csv").read_text().splitlines()
    assert rows[0] == "x,y,vx,vy" and len(rows) == 1 + 48 * 48


def test_fps_override_recorded(tmp_path):
    out = _phantom(tmp_path, frames=12)
    assert main(["pause", str(out / "frames"), "-o", str(tmp_path / "p"), "--fps", "50"] + FAST) == 0
    doc = json.loads((tmp_path / "p" / "pause_report.json").read_text())
    assert doc["fps"] == 50.0


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "tfg.cli", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    for cmd in ("phantom", "flow", "tfg", "pause", "region", "landmarks"):
        assert cmd in proc.stdout


@pytest.mark.parametrize("command", ["pause", "region", "landmarks"])
def test_json_outputs_are_byte_identical_across_runs(tmp_path, command):
    out = _phantom(tmp_path, frames=16)
    name = {"pause": "pause_report.json", "region": "region.json", "landmarks": "landmarks.json"}[command]
    blobs = []
    for run in ("a", "b"):
        assert main([command, str(out / "sequence.tfgs"), "-o", str(tmp_path / run)] + FAST) == 0
        blobs.append((tmp_path / run / name).read_bytes())
    assert blobs[0] == blobs[1]
