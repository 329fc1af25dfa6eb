"""End-to-end analyses shared by the command line and the demos.

Each function takes a loaded :class:`~tfg.imgseq.ImageSequence` and returns
a small result object; nothing here touches the filesystem.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .detect import (
    LandmarkSet,
    PauseReport,
    VarianceMap,
    detect_abnormal_region,
    detect_landmarks,
    detect_pause,
    variance_map,
)
from .flow import FlowField, FlowParams, flow_series
from .imgseq import ImageSequence
from .segment import SegmentConfig, fill_cavities, pick_myocardial_point, segment_myocardium
from .tfgcore import MotionSignal, TFGField, idg, tfg, tfg_field, track_point

__all__ = ["PauseAnalysis", "RegionAnalysis", "LandmarkAnalysis",
           "point_signals", "analyze_pause", "analyze_region", "analyze_landmarks",
           "landmark_roi"]


@dataclass(frozen=True)
class PauseAnalysis:
    point: tuple[int, int]
    mask: np.ndarray
    idg: MotionSignal
    tfg: MotionSignal
    report: PauseReport


@dataclass(frozen=True)
class RegionAnalysis:
    mask: np.ndarray
    field: TFGField
    vmap: VarianceMap
    abnormal: np.ndarray

    @property
    def count(self) -> int:
        return int(self.abnormal.sum())

    @property
    def centroid(self) -> Optional[tuple[float, float]]:
        """``(x, y)`` mean of the abnormal pixels, None when there are none."""
        if not self.abnormal.any():
            return None
        ys, xs = np.nonzero(self.abnormal)
        return float(xs.mean()), float(ys.mean())


@dataclass(frozen=True)
class LandmarkAnalysis:
    mask: np.ndarray
    roi: np.ndarray
    vmap: VarianceMap
    landmarks: LandmarkSet


def _flows(seq, flows, params):
    return list(flows) if flows is not None else flow_series(seq, params)


def point_signals(seq: ImageSequence, point, flows: Sequence[FlowField],
                  mode="fixed") -> tuple[MotionSignal, MotionSignal]:
    """IDG and TFG of a single point."""
    d = idg(track_point(point, flows, mode), flows, seq.fps)
    return d, tfg(d)


def analyze_pause(seq: ImageSequence, params: FlowParams | None = None,
                  seg: SegmentConfig | None = None, mode="fixed", point=None,
                  threshold: float = 0.2, window: int = 8, shift: int = 1,
                  min_length: Optional[int] = None,
                  flows: Optional[Sequence[FlowField]] = None) -> PauseAnalysis:
    """Beat-pause detection on the TFG of one myocardial point.

    The point defaults to the segmented pixel nearest the myocardium centroid.
    """
    mask = segment_myocardium(seq[0], seg)
    if point is None:
        point = pick_myocardial_point(mask)
    flows = _flows(seq, flows, params)
    d, t = point_signals(seq, point, flows, mode)
    report = detect_pause(t, threshold, window, shift, min_length, seq.fps)
    return PauseAnalysis((int(point[0]), int(point[1])), mask, d, t, report)


def analyze_region(seq: ImageSequence, params: FlowParams | None = None,
                   seg: SegmentConfig | None = None, mode="fixed",
                   rel_threshold: float = 0.2, opening_radius: int = 1,
                   flows: Optional[Sequence[FlowField]] = None) -> RegionAnalysis:
    """Pixels of the myocardium whose TFG variance is abnormally low."""
    mask = segment_myocardium(seq[0], seg)
    field = tfg_field(seq, _flows(seq, flows, params), mask, mode)
    vmap = variance_map(field, mask)
    return RegionAnalysis(mask, field, vmap, detect_abnormal_region(vmap, rel_threshold, opening_radius))


def landmark_roi(mask: np.ndarray, roi: str = "heart") -> np.ndarray:
    """Pixels searched for landmarks.

    ``"heart"`` is the myocardium with its enclosed cavities filled,
    ``"myocardium"`` the segmentation itself and ``"full"`` the whole frame.
    """
    if roi == "heart":
        return fill_cavities(mask)
    if roi == "myocardium":
        return np.asarray(mask, dtype=bool)
    if roi == "full":
        return np.ones(np.shape(mask), dtype=bool)
    raise ValueError(f"unknown roi {roi!r}")


def analyze_landmarks(seq: ImageSequence, params: FlowParams | None = None,
                      seg: SegmentConfig | None = None, mode="fixed", roi: str = "heart",
                      suppression_radius: float = 10.0,
                      flows: Optional[Sequence[FlowField]] = None) -> LandmarkAnalysis:
    mask = segment_myocardium(seq[0], seg)
    region = landmark_roi(mask, roi)
    field = tfg_field(seq, _flows(seq, flows, params), region, mode)
    vmap = variance_map(field, region)
    return LandmarkAnalysis(mask, region, vmap, detect_landmarks(vmap, suppression_radius))
