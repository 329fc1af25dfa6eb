"""Morphological myocardium segmentation of the first frame.

Pipeline: Gaussian smoothing, binarization (Otsu or a fixed level),
closing with a disc, filling of small holes and retention of the largest
4-connected component.  Bright structure is treated as tissue.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Union

import numpy as np
from PIL import Image
from scipy import ndimage
from skimage import filters, morphology

__all__ = [
    "SegmentationError",
    "SegmentConfig",
    "segment_myocardium",
    "close_and_fill",
    "largest_component",
    "fill_cavities",
    "pick_myocardial_point",
    "mask_to_rle",
    "rle_to_mask",
    "write_mask_png",
    "write_mask_json",
]

_FOUR = ndimage.generate_binary_structure(2, 1)


class SegmentationError(RuntimeError):
    """The pipeline produced no tissue pixels."""


@dataclass(frozen=True)
class SegmentConfig:
    """``threshold`` is ``"otsu"`` or a fixed level in [0, 1].

    Holes smaller than ``max_hole_area`` pixels are filled so that speckle
    gaps close while cavities survive.
    """

    sigma: float = 1.0
    threshold: Union[str, float] = "otsu"
    closing_radius: int = 3
    max_hole_area: int = 64

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if isinstance(self.threshold, str):
            if self.threshold != "otsu":
                raise ValueError(f"unknown threshold mode {self.threshold!r}")
        elif not 0 <= float(self.threshold) <= 1:
            raise ValueError("fixed threshold must lie in [0, 1]")
        if self.closing_radius < 0 or self.max_hole_area < 0:
            raise ValueError("closing_radius and max_hole_area must be >= 0")


def _close_fill_once(mask, closing_radius, max_hole_area):
    if closing_radius > 0:
        # pad so the closing does not erode against the frame border
        r = int(closing_radius)
        padded = np.pad(mask, r, mode="edge")
        padded = morphology.binary_closing(padded, morphology.disk(r))
        mask = padded[r:-r, r:-r] | mask
    if max_hole_area > 0:
        mask = morphology.remove_small_holes(mask, area_threshold=int(max_hole_area), connectivity=1)
    return mask


def close_and_fill(mask: np.ndarray, closing_radius: int = 3, max_hole_area: int = 64) -> np.ndarray:
    """Closing followed by small-hole filling, repeated until stable.

    Filling can create new concavities that a further closing would
    bridge, so a single pass is not idempotent; both steps only add
    pixels, which bounds the loop.
    """
    mask = np.asarray(mask, dtype=bool)
    while True:
        nxt = _close_fill_once(mask, closing_radius, max_hole_area)
        if np.array_equal(nxt, mask):
            return nxt
        mask = nxt


def largest_component(mask: np.ndarray) -> np.ndarray:
    labels, n = ndimage.label(mask, structure=_FOUR)
    if n == 0:
        return np.zeros_like(mask, dtype=bool)
    sizes = np.bincount(labels.ravel())[1:]
    return labels == (int(np.argmax(sizes)) + 1)


def segment_myocardium(frame, config: SegmentConfig | None = None) -> np.ndarray:
    """Return the myocardium mask of ``frame`` as a boolean array.

    Raises
    ------
    SegmentationError
        When binarization or the later stages leave no pixel set.
    """
    config = config or SegmentConfig()
    img = np.asarray(frame, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError("frame must be 2-D")
    smooth = ndimage.gaussian_filter(img, config.sigma, mode="nearest") if config.sigma > 0 else img
    if config.threshold == "otsu":
        if np.ptp(smooth) <= 1e-12:
            raise SegmentationError("frame has no contrast to binarize")
        level = filters.threshold_otsu(smooth)
    else:
        level = float(config.threshold)
    binary = smooth > level
    if not binary.any():
        raise SegmentationError("binarization left no tissue pixels")
    mask = largest_component(close_and_fill(binary, config.closing_radius, config.max_hole_area))
    if not mask.any():
        raise SegmentationError("segmentation produced an empty mask")
    return mask


def fill_cavities(mask: np.ndarray) -> np.ndarray:
    """All enclosed holes filled: the region bounded by the tissue."""
    return ndimage.binary_fill_holes(np.asarray(mask, dtype=bool), structure=_FOUR)


def pick_myocardial_point(mask: np.ndarray) -> tuple[int, int]:
    """Masked pixel nearest the mask centroid, as ``(x, y)``.

    Ties go to the first pixel in row-major order.
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise SegmentationError("empty mask")
    ys, xs = np.nonzero(mask)
    cx, cy = xs.mean(), ys.mean()
    d2 = np.round((xs - cx) ** 2 + (ys - cy) ** 2, 9)
    k = int(np.argmin(d2))
    return int(xs[k]), int(ys[k])


def mask_to_rle(mask: np.ndarray) -> dict:
    """Row-major run lengths, alternating False/True and starting with False."""
    flat = np.asarray(mask, dtype=bool).ravel()
    change = np.flatnonzero(np.diff(flat.astype(np.int8))) + 1
    bounds = np.concatenate([[0], change, [flat.size]])
    counts = np.diff(bounds).tolist()
    if flat.size and flat[0]:
        counts = [0] + counts
    h, w = np.shape(mask)
    return {"height": int(h), "width": int(w), "order": "row-major", "counts": [int(c) for c in counts]}


def rle_to_mask(rle: dict) -> np.ndarray:
    h, w = rle["height"], rle["width"]
    flat = np.zeros(h * w, dtype=bool)
    pos = 0
    value = False
    for c in rle["counts"]:
        flat[pos:pos + c] = value
        pos += c
        value = not value
    if pos != h * w:
        raise ValueError(f"run lengths cover {pos} pixels, expected {h * w}")
    return flat.reshape(h, w)


def write_mask_png(mask: np.ndarray, path) -> None:
    Image.fromarray(np.where(np.asarray(mask, dtype=bool), 255, 0).astype(np.uint8)).save(path)


def write_mask_json(mask: np.ndarray, path) -> None:
    with open(path, "w") as fh:
        json.dump(mask_to_rle(mask), fh, sort_keys=True)
