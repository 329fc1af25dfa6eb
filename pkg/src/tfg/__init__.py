"""Temporal flow graph analysis of periodic motion in grayscale sequences."""

__version__ = "0.1.0"

from .detect import (
    DetectionError,
    LandmarkSet,
    PauseReport,
    VarianceMap,
    detect_abnormal_region,
    detect_landmarks,
    detect_pause,
    short_time_variance,
    variance_map,
)
from .flow import FlowError, FlowField, FlowParams, compute_flow, flow_series, to_polar
from .imgseq import ImageSequence, SequenceError, load_sequence, save_sequence
from .phantom import PendulumSpec, RingPhantomSpec, gen_pendulum, gen_ring, generate
from .segment import SegmentConfig, SegmentationError, pick_myocardial_point, segment_myocardium
from .tfgcore import (
    MotionSignal,
    TFGField,
    estimate_period,
    idg,
    quantize_direction,
    tfg,
    tfg_field,
    track_point,
)

__all__ = [
    "DetectionError", "LandmarkSet", "PauseReport", "VarianceMap",
    "detect_abnormal_region", "detect_landmarks", "detect_pause",
    "short_time_variance", "variance_map",
    "FlowError", "FlowField", "FlowParams", "compute_flow", "flow_series", "to_polar",
    "ImageSequence", "SequenceError", "load_sequence", "save_sequence",
    "PendulumSpec", "RingPhantomSpec", "gen_pendulum", "gen_ring", "generate",
    "SegmentConfig", "SegmentationError", "pick_myocardial_point", "segment_myocardium",
    "MotionSignal", "TFGField", "estimate_period", "idg", "quantize_direction",
    "tfg", "tfg_field", "track_point",
]
