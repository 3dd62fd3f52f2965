import json
import math

import numpy as np
import pytest

import fluoroforge as ff


def test_water_cube_central_pixel():
    cube = ff.water_cube_phantom()
    cam = ff.make_camera([0, 0, 0], [0, 0, -1], sad=700, sid=1000, width=33, height=33, pixel_size_mm=1.0, up=[0, 1, 0])
    img = ff.render_drr(cube, cam)
    assert img.shape == (33, 33)
    # 10 cm of water at 0.2 / cm.
    assert img[16, 16] == pytest.approx(math.exp(-2.0), rel=1e-3)
    assert cube.hu.shape == tuple(reversed(cube.dims))


def test_sphere_mask_area():
    sphere = ff.icosphere([0, 0, 0], 50.0, 4)
    cam = ff.make_camera([0, 0, 0], [0, 0, -1], width=256, height=256, pixel_size_mm=1.0)
    mask = ff.project_mask(sphere, cam)
    radius_px = 50.0 * cam.sid / cam.sad
    assert mask.sum() == pytest.approx(math.pi * radius_px**2, rel=0.02)


def test_rle_round_trip():
    rng = np.random.default_rng(3)
    for _ in range(20):
        h, w = rng.integers(1, 40, size=2)
        mask = (rng.random((h, w)) < 0.3).astype(np.uint8)
        counts = ff.rle_encode(mask)
        assert sum(counts) == h * w
        np.testing.assert_array_equal(ff.rle_decode(counts, int(h), int(w)), mask)


def test_metrics():
    a = np.zeros((10, 10), np.uint8)
    b = np.zeros((10, 10), np.uint8)
    a[2:6, 2:6] = 1
    b[2:6, 4:8] = 1
    assert ff.iou(a, b) == pytest.approx(8 / 24)
    assert ff.dice(a, b) == pytest.approx(16 / 32)
    assert ff.hausdorff(a, b) == pytest.approx(2.0)
    assert ff.iou(a, a) == 1.0


def test_quantize_lowest_index_on_tie():
    book = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]])
    index, value = ff.quantize(book, np.array([2.0, 0.0]))
    assert index == 0
    np.testing.assert_array_equal(value, [1.0, 0.0])
    index, _ = ff.quantize(book, np.array([0.5, 0.5]))
    assert index == 0
    total, codebook, commitment = ff.vq_loss(np.array([1.0, 1.0]), np.array([0.0, 0.0]), 0.25)
    assert (codebook, commitment, total) == pytest.approx((2.0, 0.5, 2.5))


def test_errors_map_to_python_exceptions(tmp_path):
    with pytest.raises(ff.LoadError):
        ff.load_volume(tmp_path / "missing.volhdr")
    assert issubclass(ff.ConfigError, ff.Error)


def test_tiny_generation(tmp_path):
    config_path = ff.write_phantom_inputs(tmp_path, 7)
    config = json.loads(config_path.read_text())
    config["cts"] = config["cts"][:2]
    config["random_views_per_ct"] = 1
    config_path.write_text(json.dumps(config))

    report = ff.run_generation(config_path, offline=True)
    assert report["failed"] == 0
    assert report["generated"] == report["planned"] > 0

    again = ff.run_generation(config_path, offline=True)
    assert again["generated"] == 0 and again["full_resume"]

    stats = ff.dataset_stats(tmp_path / "dataset")
    assert stats["samples"] == report["planned"]

    # Ground truth scored against itself is perfect for every kept mask.
    scores = ff.evaluate(tmp_path / "dataset", tmp_path / "dataset")
    assert scores["gt_masks_kept"] > 0
    for row in scores["rows"]:
        assert row["iou_mean"] == 1.0 and row["dice_mean"] == 1.0
        assert row["hdd_mean"] == 0.0
