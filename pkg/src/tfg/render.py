"""PNG renderings of variance maps, abnormal regions and landmarks."""
from __future__ import annotations

import numpy as np
from matplotlib import colormaps
from PIL import Image, ImageColor, ImageDraw

from .detect import LandmarkSet, VarianceMap

__all__ = ["variance_rgb", "write_variance_png", "overlay_mask", "write_overlay_png",
           "write_landmark_png"]


def _gray_rgb(frame) -> np.ndarray:
    g = np.rint(np.clip(np.asarray(frame, dtype=np.float64), 0, 1) * 255).astype(np.uint8)
    return np.repeat(g[..., None], 3, axis=2)


def variance_rgb(vmap: VarianceMap) -> np.ndarray:
    """Viridis pseudo-colour of the masked variances, min-max normalised.

    Unmasked pixels are black; a constant map renders at the bottom of the ramp.
    """
    out = np.zeros(vmap.shape + (3,), dtype=np.uint8)
    if not vmap.mask.any():
        return out
    v = vmap.values[vmap.mask]
    lo, hi = float(v.min()), float(v.max())
    norm = (v - lo) / (hi - lo) if hi > lo else np.zeros_like(v)
    rgba = colormaps["viridis"](norm, bytes=True)
    out[vmap.mask] = rgba[:, :3]
    return out


def write_variance_png(vmap: VarianceMap, path) -> None:
    Image.fromarray(variance_rgb(vmap)).save(path)


def overlay_mask(frame, mask, colour="red", alpha: float = 0.6) -> np.ndarray:
    """Blend ``colour`` over ``frame`` wherever ``mask`` is set."""
    rgb = _gray_rgb(frame).astype(np.float64)
    c = np.array(ImageColor.getrgb(colour), dtype=np.float64)
    m = np.asarray(mask, dtype=bool)
    rgb[m] = (1 - alpha) * rgb[m] + alpha * c
    return np.rint(rgb).astype(np.uint8)


def write_overlay_png(frame, mask, path, colour="red") -> None:
    Image.fromarray(overlay_mask(frame, mask, colour)).save(path)


def write_landmark_png(frame, landmarks: LandmarkSet, path, radius: int = 2) -> None:
    """Frame with one filled disc per landmark in its role colour."""
    img = Image.fromarray(_gray_rgb(frame))
    draw = ImageDraw.Draw(img)
    for lm in landmarks:
        box = [lm.x - radius, lm.y - radius, lm.x + radius, lm.y + radius]
        draw.ellipse(box, fill=lm.colour)
    img.save(path)
