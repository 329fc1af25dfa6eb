"""Detectors built on temporal flow graphs.

* :func:`detect_pause` finds beat pauses as long runs of low short-time
  variance on a single TFG and classifies them by duration.
* :func:`variance_map` / :func:`detect_abnormal_region` flag pixels whose TFG
  barely varies compared with the rest of the tissue.
* :func:`detect_landmarks` picks four low-variance cavity candidates (one per
  triangular quadrant) and two high-variance valve candidates.

All variances are population variances (divide by N).
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import ndimage

from .tfgcore import MotionSignal, SignalKind, TFGField

__all__ = [
    "DetectionError",
    "ARREST_SECONDS",
    "PauseInterval",
    "PauseReport",
    "VarianceMap",
    "Landmark",
    "LandmarkSet",
    "QUADRANTS",
    "LANDMARK_COLOURS",
    "short_time_variance",
    "classify_pause",
    "detect_pause",
    "variance_map",
    "detect_abnormal_region",
    "quadrant_labels",
    "detect_landmarks",
    "write_variance_csv",
]

ARREST_SECONDS = 4.0
QUADRANTS = ("left", "right", "top", "bottom")
LANDMARK_COLOURS = {
    "left": "red",
    "right": "blue",
    "top": "green",
    "bottom": "yellow",
    "valve_1": "cyan",
    "valve_2": "magenta",
}


class DetectionError(ValueError):
    """Inputs a detector cannot work with."""


# --- beat pauses ---------------------------------------------------------

def _values(signal) -> np.ndarray:
    if isinstance(signal, MotionSignal):
        return signal.values
    return np.asarray(signal, dtype=np.float64).reshape(-1)


def short_time_variance(signal, window: int = 8, shift: int = 1) -> np.ndarray:
    """Population variance of ``signal[j*shift : j*shift + window]`` for each j."""
    x = _values(signal)
    if window < 1 or shift < 1:
        raise DetectionError("window and shift must be >= 1")
    if len(x) < window:
        raise DetectionError(f"signal of length {len(x)} is shorter than window {window}")
    frames = sliding_window_view(x, window)[::shift]
    return frames.var(axis=1)


def classify_pause(seconds: float, arrest_seconds: float = ARREST_SECONDS) -> str:
    """``ventricular_arrest`` strictly above ``arrest_seconds``, else ``missing_beats``."""
    return "ventricular_arrest" if seconds > arrest_seconds else "missing_beats"


@dataclass(frozen=True)
class PauseInterval:
    start: int
    length: int
    seconds: float
    classification: str

    def to_dict(self) -> dict:
        return {"start": self.start, "length": self.length,
                "seconds": self.seconds, "classification": self.classification}


@dataclass(frozen=True)
class PauseReport:
    """Detected pauses.  ``start`` and ``length`` count TFG samples; each
    variance window is attributed to its first sample."""

    intervals: tuple
    threshold: float
    window: int
    shift: int
    min_length: int
    fps: float
    variance: np.ndarray = field(repr=False, compare=False, default=None)

    def to_dict(self) -> dict:
        return {
            "intervals": [iv.to_dict() for iv in self.intervals],
            "threshold": self.threshold,
            "window": self.window,
            "shift": self.shift,
            "min_length": self.min_length,
            "fps": self.fps,
            "arrest_seconds": ARREST_SECONDS,
        }


def _runs(flags: np.ndarray) -> list[tuple[int, int]]:
    padded = np.concatenate([[False], flags, [False]]).astype(np.int8)
    d = np.diff(padded)
    starts = np.flatnonzero(d == 1)
    ends = np.flatnonzero(d == -1)
    return [(int(s), int(e - s)) for s, e in zip(starts, ends)]


def detect_pause(signal: MotionSignal, threshold: float = 0.2, window: int = 8,
                 shift: int = 1, min_length: Optional[int] = None,
                 fps: Optional[float] = None) -> PauseReport:
    """Find runs where the short-time variance of a TFG stays below ``threshold``.

    ``min_length`` defaults to ``window``; shorter runs are ignored.  Run
    lengths are converted to seconds with the signal's fps (or ``fps``).
    """
    if isinstance(signal, MotionSignal) and signal.kind is not SignalKind.TFG:
        raise DetectionError("detect_pause expects a TFG")
    if fps is None:
        fps = signal.fps if isinstance(signal, MotionSignal) else None
    if fps is None or not fps > 0:
        raise DetectionError("a positive fps is required")
    if min_length is None:
        min_length = window
    stv = short_time_variance(signal, window, shift)
    intervals = []
    for start, count in _runs(stv < threshold):
        length = count * shift
        if length < min_length:
            continue
        seconds = length / fps
        intervals.append(PauseInterval(start * shift, length, seconds, classify_pause(seconds)))
    return PauseReport(tuple(intervals), float(threshold), int(window), int(shift),
                       int(min_length), float(fps), stv)


# --- variance maps -------------------------------------------------------

@dataclass(frozen=True, eq=False)
class VarianceMap:
    """Per-pixel TFG variance; entries outside ``mask`` are NaN."""

    values: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        mask = np.array(self.mask, dtype=bool)
        if values.shape != mask.shape or values.ndim != 2:
            raise DetectionError("values and mask must be 2-D grids of equal shape")
        inside = values[mask]
        if inside.size and (not np.all(np.isfinite(inside)) or inside.min() < 0):
            raise DetectionError("masked variances must be finite and >= 0")
        values[~mask] = np.nan
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "mask", mask)

    @property
    def shape(self):
        return self.mask.shape

    def scaled(self, factor: float) -> "VarianceMap":
        return VarianceMap(self.values * factor, self.mask)


def variance_map(field: TFGField, mask: Optional[np.ndarray] = None) -> VarianceMap:
    """Population variance of each masked pixel's full TFG."""
    if mask is None:
        mask = field.mask
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != field.mask.shape:
        raise DetectionError("mask shape differs from the TFG field")
    if np.any(mask & ~field.mask):
        raise DetectionError("mask selects pixels without a TFG")
    sig = field.values[mask]
    mean = sig.mean(axis=1, keepdims=True)
    var = np.mean((sig - mean) ** 2, axis=1)
    values = np.full(mask.shape, np.nan)
    values[mask] = var
    return VarianceMap(values, mask)


def detect_abnormal_region(vmap: VarianceMap, rel_threshold: float = 0.2,
                           opening_radius: int = 1) -> np.ndarray:
    """Masked pixels with variance below ``rel_threshold * median``, opened.

    The opening uses a 4-connected disc of ``opening_radius`` and removes
    isolated pixels; the result may be empty.
    """
    if not vmap.mask.any():
        raise DetectionError("variance map has no masked pixels")
    med = float(np.median(vmap.values[vmap.mask]))
    low = np.zeros(vmap.shape, dtype=bool)
    low[vmap.mask] = vmap.values[vmap.mask] < rel_threshold * med
    if opening_radius > 0:
        se = ndimage.iterate_structure(ndimage.generate_binary_structure(2, 1), int(opening_radius))
        low = ndimage.binary_opening(low, structure=se)
    return low & vmap.mask


# --- landmarks -----------------------------------------------------------

@dataclass(frozen=True)
class Landmark:
    role: str
    x: int
    y: int
    variance: float

    @property
    def colour(self) -> str:
        return LANDMARK_COLOURS[self.role]

    def to_dict(self) -> dict:
        return {"role": self.role, "x": self.x, "y": self.y,
                "variance": self.variance, "colour": self.colour}


@dataclass(frozen=True)
class LandmarkSet:
    """Cavity candidates keyed by quadrant plus two valve candidates."""

    cavities: dict
    valves: tuple
    suppression_radius: float

    def __iter__(self):
        yield from (self.cavities[q] for q in QUADRANTS)
        yield from self.valves

    def as_dict(self) -> dict:
        return {lm.role: lm for lm in self}

    def to_dict(self) -> dict:
        return {"landmarks": [lm.to_dict() for lm in self],
                "suppression_radius": self.suppression_radius}


def quadrant_labels(mask: np.ndarray) -> np.ndarray:
    """Assign every masked pixel to a diagonal quadrant of the mask's bounding box.

    Returns an int grid: 0 left, 1 right, 2 top, 3 bottom, -1 unmasked.
    Pixels on a diagonal go left when at or left of the centre column,
    otherwise top/bottom.
    """
    mask = np.asarray(mask, dtype=bool)
    ys, xs = np.nonzero(mask)
    out = np.full(mask.shape, -1, dtype=int)
    if xs.size == 0:
        return out
    x0, x1, y0, y1 = xs.min(), xs.max(), ys.min(), ys.max()
    cx, cy = (x0 + x1) / 2.0, (y0 + y1) / 2.0
    hx, hy = max((x1 - x0) / 2.0, 0.5), max((y1 - y0) / 2.0, 0.5)
    # scale so both half-extents map to the same length without float division ties
    dx = (xs - cx) * hy
    dy = (ys - cy) * hx
    horizontal = (np.abs(dx) > np.abs(dy)) | ((np.abs(dx) == np.abs(dy)) & (dx <= 0))
    lab = np.where(horizontal, np.where(dx <= 0, 0, 1), np.where(dy < 0, 2, 3))
    out[ys, xs] = lab
    return out


def detect_landmarks(vmap: VarianceMap, suppression_radius: float = 10.0) -> LandmarkSet:
    """Variance minima per quadrant and two separated variance maxima."""
    labels = quadrant_labels(vmap.mask)
    ys, xs = np.nonzero(vmap.mask)
    vals = vmap.values[ys, xs]
    lab = labels[ys, xs]
    cavities = {}
    for q, name in enumerate(QUADRANTS):
        idx = np.flatnonzero(lab == q)
        if idx.size == 0:
            raise DetectionError(f"quadrant {name!r} has no masked pixels")
        k = idx[int(np.argmin(vals[idx]))]
        cavities[name] = Landmark(name, int(xs[k]), int(ys[k]), float(vals[k]))

    order = np.argsort(-vals, kind="stable")
    first = order[0]
    second = None
    r2 = float(suppression_radius) ** 2
    for k in order[1:]:
        if (xs[k] - xs[first]) ** 2 + (ys[k] - ys[first]) ** 2 >= r2:
            second = k
            break
    if second is None:
        raise DetectionError("no second maximum outside the suppression radius")
    valves = tuple(Landmark(role, int(xs[k]), int(ys[k]), float(vals[k]))
                   for role, k in (("valve_1", first), ("valve_2", second)))
    return LandmarkSet(cavities, valves, float(suppression_radius))


def write_variance_csv(vmap: VarianceMap, path) -> None:
    """``x,y,variance`` rows for masked pixels in row-major order."""
    ys, xs = np.nonzero(vmap.mask)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "variance"])
        for x, y in zip(xs, ys):
            writer.writerow([int(x), int(y), repr(float(vmap.values[y, x]))])


def write_json(doc: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
