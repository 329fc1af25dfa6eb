"""Instantaneous displacement graphs (IDG) and temporal flow graphs (TFG).

An IDG is the per-transition signed displacement of a point: the flow
magnitude times a direction sign that is +1 for angles in ``[0, 180)`` and
-1 for angles in ``[-180, 0)``.  A TFG is the running sum of an IDG and is
periodic whenever the point moves cyclically.

Two sampling modes are supported.  ``fixed`` reads the flow at the same pixel
in every frame (Eulerian); ``tracked`` advects the point with the flow
(Lagrangian).  Detectors use ``fixed``.
"""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import ndimage

from .flow import FlowField, sample_bilinear

__all__ = [
    "SignalKind",
    "TrackMode",
    "PointTrack",
    "MotionSignal",
    "TFGField",
    "quantize_direction",
    "track_point",
    "idg",
    "tfg",
    "running_sum",
    "tfg_field",
    "estimate_period",
    "write_signal_csv",
]


class SignalKind(str, enum.Enum):
    IDG = "IDG"
    TFG = "TFG"


class TrackMode(str, enum.Enum):
    FIXED = "fixed"
    TRACKED = "tracked"


@dataclass(frozen=True, eq=False)
class PointTrack:
    """Positions ``(x, y)`` of a point in every frame.

    ``clamped`` is set when a tracked position had to be pulled back inside
    the image.
    """

    start: tuple[float, float]
    mode: TrackMode
    positions: np.ndarray
    clamped: bool = False

    def __len__(self):
        return len(self.positions)


@dataclass(frozen=True, eq=False)
class MotionSignal:
    kind: SignalKind
    values: np.ndarray
    fps: float = 29.0

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64).reshape(-1)
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "kind", SignalKind(self.kind))

    def __len__(self):
        return len(self.values)

    @property
    def frames(self) -> np.ndarray:
        """1-based frame index of each sample (sample k ends at frame k)."""
        return np.arange(1, len(self.values) + 1)


@dataclass(frozen=True, eq=False)
class TFGField:
    """One TFG per masked pixel of the first frame.

    ``values`` has shape ``(H, W, T)``; unmasked pixels hold NaN.
    """

    values: np.ndarray
    mask: np.ndarray
    fps: float = 29.0
    mode: TrackMode = TrackMode.FIXED

    @property
    def shape(self) -> tuple[int, int]:
        return self.mask.shape

    @property
    def count(self) -> int:
        return int(self.mask.sum())

    @property
    def length(self) -> int:
        return self.values.shape[2]

    def signal(self, x: int, y: int) -> MotionSignal:
        if not self.mask[y, x]:
            raise KeyError(f"pixel ({x}, {y}) is not masked")
        return MotionSignal(SignalKind.TFG, self.values[y, x], self.fps)

    def signals(self) -> np.ndarray:
        """Masked TFGs stacked row-major, shape ``(count, T)``."""
        return self.values[self.mask]


def quantize_direction(theta):
    """Direction sign of an angle in degrees: -1 on [-180, 0), +1 on [0, 180)."""
    t = np.asarray(theta, dtype=np.float64)
    if np.any(~np.isfinite(t)) or np.any(t < -180.0) or np.any(t >= 180.0):
        raise ValueError("angle outside [-180, 180)")
    out = np.where(t < 0.0, -1, 1)
    if out.ndim == 0:
        return int(out)
    return out


def _signed_speed(vx, vy) -> np.ndarray:
    # magnitude times quantized direction, angle convention as in flow.to_polar
    vx = np.asarray(vx, dtype=np.float64)
    vy = np.asarray(vy, dtype=np.float64)
    mag = np.hypot(vx, vy)
    ang = np.degrees(np.arctan2(vy, vx))
    ang = np.where(ang >= 180.0, ang - 360.0, ang)
    ang = np.where(mag == 0.0, 0.0, ang)
    return mag * quantize_direction(ang)


def _clamp(x, y, shape):
    h, w = shape
    cx = np.clip(x, 0.0, w - 1.0)
    cy = np.clip(y, 0.0, h - 1.0)
    return cx, cy, bool(np.any(cx != x) or np.any(cy != y))


def track_point(start, flows: Sequence[FlowField], mode="fixed") -> PointTrack:
    """Build the per-frame positions of a point starting at ``start = (x, y)``."""
    mode = TrackMode(mode)
    if len(flows) < 1:
        raise ValueError("need at least one flow field")
    shape = flows[0].shape
    x0, y0 = float(start[0]), float(start[1])
    h, w = shape
    if not (0 <= x0 <= w - 1 and 0 <= y0 <= h - 1):
        raise ValueError(f"start {start} outside a {w}x{h} frame")
    pos = np.empty((len(flows) + 1, 2))
    pos[0] = x0, y0
    clamped = False
    for n, f in enumerate(flows):
        if mode is TrackMode.FIXED:
            pos[n + 1] = pos[n]
            continue
        x, y = pos[n]
        dx = float(sample_bilinear(f.vx, x, y))
        dy = float(sample_bilinear(f.vy, x, y))
        nx, ny, hit = _clamp(x + dx, y + dy, shape)
        clamped |= hit
        pos[n + 1] = nx, ny
    return PointTrack((x0, y0), mode, pos, clamped)


def idg(track: PointTrack, flows: Sequence[FlowField], fps: float = 29.0) -> MotionSignal:
    """Instantaneous displacement graph of a point.

    The flow vector is bilinearly sampled at the track position of frame n,
    then reduced to ``magnitude * dir(angle)``.
    """
    if len(flows) != len(track.positions) - 1:
        raise ValueError(
            f"{len(flows)} flow fields for a track of {len(track.positions)} positions")
    values = np.empty(len(flows))
    for n, f in enumerate(flows):
        x, y = track.positions[n]
        h, w = f.shape
        if not (0 <= x <= w - 1 and 0 <= y <= h - 1):
            raise ValueError(f"track position ({x}, {y}) outside the frame")
        vx = sample_bilinear(f.vx, x, y)
        vy = sample_bilinear(f.vy, x, y)
        values[n] = _signed_speed(vx, vy)
    return MotionSignal(SignalKind.IDG, values, fps)


def running_sum(values, axis: int = -1) -> np.ndarray:
    """Compensated (Neumaier) prefix sum along ``axis``."""
    a = np.moveaxis(np.asarray(values, dtype=np.float64), axis, 0)
    out = np.empty_like(a)
    if a.shape[0] == 0:
        return np.moveaxis(out, 0, axis)
    s = np.zeros(a.shape[1:])
    comp = np.zeros(a.shape[1:])
    for k in range(a.shape[0]):
        x = a[k]
        t = s + x
        comp += np.where(np.abs(s) >= np.abs(x), (s - t) + x, (x - t) + s)
        s = t
        out[k] = s + comp
    return np.moveaxis(out, 0, axis)


def tfg(signal: MotionSignal) -> MotionSignal:
    """Temporal flow graph: ``TFG[k] = sum(IDG[0..k])``."""
    if signal.kind is not SignalKind.IDG:
        raise ValueError(f"tfg() needs an IDG, got {signal.kind.value}")
    return MotionSignal(SignalKind.TFG, running_sum(signal.values), signal.fps)


def tfg_field(seq, flows: Sequence[FlowField], mask: Optional[np.ndarray] = None,
              mode="fixed") -> TFGField:
    """TFGs for every masked pixel of the first frame.

    Parameters
    ----------
    seq : ImageSequence
        Source sequence; supplies the frame shape and fps.
    flows : list of FlowField
        ``len(seq) - 1`` consecutive-frame flows.
    mask : bool ndarray, optional
        Pixels to analyse; all pixels when omitted.
    mode : {"fixed", "tracked"}
    """
    mode = TrackMode(mode)
    shape = seq.shape
    fps = seq.fps
    if len(flows) != len(seq) - 1:
        raise ValueError(f"{len(flows)} flows for {len(seq)} frames")
    if mask is None:
        mask = np.ones(shape, dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != tuple(shape):
        raise ValueError(f"mask shape {mask.shape} != frame shape {tuple(shape)}")
    for f in flows:
        if f.shape != tuple(shape):
            raise ValueError("flow field shape differs from the frames")

    ys, xs = np.nonzero(mask)
    idgs = np.empty((len(flows), len(xs)))
    px = xs.astype(np.float64)
    py = ys.astype(np.float64)
    for n, f in enumerate(flows):
        if mode is TrackMode.FIXED:
            vx = f.vx[ys, xs]
            vy = f.vy[ys, xs]
        else:
            coords = np.array([py, px])
            vx = ndimage.map_coordinates(f.vx, coords, order=1, mode="nearest")
            vy = ndimage.map_coordinates(f.vy, coords, order=1, mode="nearest")
            px, py, _ = _clamp(px + vx, py + vy, shape)
        idgs[n] = _signed_speed(vx, vy)

    sums = running_sum(idgs, axis=0)
    values = np.full(tuple(shape) + (len(flows),), np.nan)
    values[ys, xs, :] = sums.T
    mask = mask.copy()
    mask.flags.writeable = False
    return TFGField(values, mask, fps, mode)


def estimate_period(signal: MotionSignal, prominence: float = 3.0) -> Optional[float]:
    """Dominant period in frames from the magnitude-spectrum peak.

    The zero-frequency bin is excluded and the peak location is refined by a
    three-point parabola.  Returns None when the peak is below ``prominence``
    times the median spectral magnitude.
    """
    x = np.asarray(signal.values, dtype=np.float64)
    n = len(x)
    if n < 4:
        return None
    x = x - x.mean()
    if not np.any(np.abs(x) > 1e-12 * max(1.0, float(np.max(np.abs(signal.values))))):
        return None
    spec = np.abs(np.fft.rfft(x))[1:]
    if len(spec) < 2:
        return None
    k = int(np.argmax(spec))
    med = float(np.median(spec))
    if spec[k] < prominence * med or spec[k] == 0:
        return None
    shift = 0.0
    if 0 < k < len(spec) - 1:
        a, b, c = spec[k - 1], spec[k], spec[k + 1]
        denom = a - 2 * b + c
        if denom != 0:
            shift = float(np.clip(0.5 * (a - c) / denom, -0.5, 0.5))
    freq_bin = k + 1 + shift
    return n / freq_bin


def write_signal_csv(signal: MotionSignal, path) -> None:
    """``frame,value`` rows, frames numbered from 1."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["frame", "value"])
        for k, v in zip(signal.frames, signal.values):
            writer.writerow([int(k), repr(float(v))])
