"""Synthetic fluoroscopy dataset generation, projection and evaluation.

Array conventions: images and masks are (height, width) with row 0 at the top;
volumes are (z, y, x). Dataset-level calls return plain dicts.
"""

import json as _json

from ._core import (
    ConfigError,
    Error,
    GeometryError,
    LoadError,
    MismatchError,
    UndefinedMetric,
    ViewUnavailable,
    augment,
    box,
    cylinder,
    describe,
    dice,
    dice_loss,
    focal_loss,
    hausdorff,
    icosphere,
    iou,
    load_mesh,
    load_volume,
    make_camera,
    project_mask,
    quantize,
    random_view,
    render_drr,
    rle_decode,
    rle_encode,
    torso_phantom,
    vq_loss,
    water_cube_phantom,
    write_phantom_inputs,
    write_volume,
)
from . import _core

__all__ = [name for name in dir(_core) if not name.startswith("_") and not name.endswith("_json")] + [
    "run_generation",
    "dataset_stats",
    "evaluate",
]


def run_generation(config, output=None, workers=None, offline=False):
    """Generate (or resume) the dataset described by a config file; returns the run report."""
    return _json.loads(_core.run_generation_json(str(config), output and str(output), workers, offline))


def dataset_stats(root):
    return _json.loads(_core.dataset_stats_json(str(root)))


def evaluate(pred, gt, min_mask_frac=0.025, hdd_unit="px", hdd_percentile=None):
    """Score a prediction archive against a ground-truth dataset; returns the metrics report."""
    return _json.loads(_core.evaluate_json(str(pred), str(gt), min_mask_frac, hdd_unit, hdd_percentile))
