"""Synthetic sequences with analytic ground truth.

Two scenes are provided:

* a pendulum bob (Gaussian-profile bright disc) whose centre follows
  ``A cos(w t + phi)`` along a fixed axis, and
* a beating ring: a bright annulus with radius ``R + a cos(2 pi t / P)``,
  optional beat pause, optional frozen angular sector and multiplicative
  speckle.

Frame indices are 0-based.  Angles follow the flow convention: degrees from
the +x (column) axis toward +y (down the rows).
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy import ndimage
from scipy.special import erf

from .imgseq import ImageSequence
from .segment import mask_to_rle

__all__ = [
    "PhantomError",
    "PendulumSpec",
    "RingPhantomSpec",
    "GroundTruth",
    "gen_pendulum",
    "gen_ring",
    "ring_radius",
    "ring_effective_time",
    "annulus_mask",
    "sector_wedge",
    "spec_from_dict",
    "generate",
]


class PhantomError(ValueError):
    """Invalid phantom specification."""


@dataclass(frozen=True)
class PendulumSpec:
    """Small-angle pendulum seen as a bob oscillating about the frame centre.

    ``angular_frequency`` is ``sqrt(g / L)`` in radians per frame; ``length``
    only documents the derivation and does not affect rendering.
    ``axis_deg`` is the swing direction; 90 moves the bob along the rows.
    """

    amplitude: float = 10.0
    angular_frequency: float = 2 * math.pi / 25
    phase: float = 0.0
    length: float = 100.0
    frames: int = 100
    width: int = 64
    height: int = 64
    bob_radius: float = 5.0
    fps: float = 29.0
    axis_deg: float = 90.0
    intensity: float = 0.9

    def __post_init__(self):
        if self.amplitude < 0:
            raise PhantomError("amplitude must be >= 0")
        if not self.angular_frequency > 0:
            raise PhantomError("angular_frequency must be > 0")
        if self.frames < 2:
            raise PhantomError("frames must be >= 2")
        if self.bob_radius <= 0 or self.width < 2 or self.height < 2:
            raise PhantomError("bob_radius and image size must be positive")
        if not self.fps > 0:
            raise PhantomError("fps must be > 0")
        if not 0 < self.intensity <= 1:
            raise PhantomError("intensity must lie in (0, 1]")
        cx, cy = self.equilibrium
        ux, uy = self.axis
        reach_x = self.amplitude * abs(ux) + 2 * self.bob_radius
        reach_y = self.amplitude * abs(uy) + 2 * self.bob_radius
        if cx - reach_x < 0 or cx + reach_x > self.width - 1 \
                or cy - reach_y < 0 or cy + reach_y > self.height - 1:
            raise PhantomError("bob leaves the frame at the swing extremes")

    @property
    def equilibrium(self) -> tuple[float, float]:
        return (self.width - 1) / 2.0, (self.height - 1) / 2.0

    @property
    def axis(self) -> tuple[float, float]:
        a = math.radians(self.axis_deg)
        return math.cos(a), math.sin(a)

    @property
    def period(self) -> float:
        return 2 * math.pi / self.angular_frequency

    def offset(self, t) -> np.ndarray:
        """Signed distance of the bob from equilibrium along the axis."""
        t = np.asarray(t, dtype=np.float64)
        return self.amplitude * np.cos(self.angular_frequency * t + self.phase)


@dataclass(frozen=True)
class RingPhantomSpec:
    """Beating annulus with optional pause and frozen sector.

    ``pause`` is ``(start_frame, length_frames)``; ``frozen_sector`` is
    ``(start_deg, end_deg)``, wrapping through 360 when start > end.

    ``speckle_mode`` selects how the uniform speckle field is drawn:
    ``"tissue"`` draws it once and lets it move with the wall (background
    speckle stays put), ``"frame"`` redraws it for every frame.
    """

    width: int = 96
    height: int = 96
    center: Optional[tuple[float, float]] = None
    mean_radius: float = 24.0
    wall_thickness: float = 8.0
    amplitude: float = 3.0
    period: float = 25.0
    frames: int = 180
    fps: float = 29.0
    speckle_contrast: float = 0.0
    pause: Optional[tuple[int, int]] = None
    frozen_sector: Optional[tuple[float, float]] = None
    rng_seed: int = 0
    speckle_mode: str = "tissue"
    wall_intensity: float = 0.8
    background_intensity: float = 0.1
    edge_softness: float = 1.0

    def __post_init__(self):
        if self.center is None:
            object.__setattr__(self, "center", ((self.width - 1) / 2.0, (self.height - 1) / 2.0))
        else:
            object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if self.pause is not None:
            object.__setattr__(self, "pause", tuple(int(p) for p in self.pause))
        if self.frozen_sector is not None:
            object.__setattr__(self, "frozen_sector", tuple(float(a) for a in self.frozen_sector))
        if self.width < 8 or self.height < 8:
            raise PhantomError("image too small")
        if self.frames < 2:
            raise PhantomError("frames must be >= 2")
        if not self.fps > 0 or not self.period > 0:
            raise PhantomError("fps and period must be > 0")
        if self.wall_thickness <= 0 or self.mean_radius <= 0:
            raise PhantomError("mean_radius and wall_thickness must be > 0")
        if self.amplitude < 0:
            raise PhantomError("amplitude must be >= 0")
        if not self.amplitude < self.mean_radius - self.wall_thickness / 2:
            raise PhantomError("pulsation amplitude must be < mean_radius - wall_thickness/2")
        if self.speckle_contrast < 0:
            raise PhantomError("speckle_contrast must be >= 0")
        if self.speckle_mode not in ("tissue", "frame"):
            raise PhantomError("speckle_mode must be 'tissue' or 'frame'")
        if int(self.rng_seed) != self.rng_seed or self.rng_seed < 0:
            raise PhantomError("rng_seed must be an unsigned integer")
        if not 0 <= self.background_intensity <= 1 or not 0 <= self.wall_intensity <= 1:
            raise PhantomError("intensities must lie in [0, 1]")
        if self.pause is not None:
            start, length = self.pause
            if length < 1 or start < 0 or start + length > self.frames:
                raise PhantomError(f"pause {self.pause} outside frames [0, {self.frames})")
        if self.frozen_sector is not None:
            for a in self.frozen_sector:
                if not 0 <= a < 360:
                    raise PhantomError("sector angles must lie in [0, 360)")


def ring_effective_time(spec: RingPhantomSpec, t) -> np.ndarray:
    """Beat clock: stops during the pause and resumes in phase afterwards."""
    t = np.asarray(t, dtype=np.float64)
    if spec.pause is None:
        return t
    start, length = spec.pause
    return np.where(t < start, t, np.where(t < start + length, start, t - length))


def ring_radius(spec: RingPhantomSpec, t) -> np.ndarray:
    """Mean wall radius of the moving (non-frozen) ring at frame ``t``."""
    tau = ring_effective_time(spec, t)
    return spec.mean_radius + spec.amplitude * np.cos(2 * np.pi * tau / spec.period)


def _polar_grid(spec: RingPhantomSpec) -> tuple[np.ndarray, np.ndarray]:
    yy, xx = np.mgrid[0:spec.height, 0:spec.width].astype(np.float64)
    cx, cy = spec.center
    dist = np.hypot(xx - cx, yy - cy)
    ang = np.degrees(np.arctan2(yy - cy, xx - cx)) % 360.0
    return dist, ang


def _in_sector(ang, sector) -> np.ndarray:
    start, end = sector
    if start <= end:
        return (ang >= start) & (ang < end)
    return (ang >= start) | (ang < end)


def sector_wedge(spec: RingPhantomSpec) -> np.ndarray:
    """Pixels whose polar angle about the centre lies in the frozen sector."""
    if spec.frozen_sector is None:
        return np.zeros((spec.height, spec.width), dtype=bool)
    _, ang = _polar_grid(spec)
    return _in_sector(ang, spec.frozen_sector)


def _radius_map(spec: RingPhantomSpec, t: int, wedge: np.ndarray) -> np.ndarray:
    r = np.full((spec.height, spec.width), float(ring_radius(spec, t)))
    r[wedge] = float(ring_radius(spec, 0))
    return r


def annulus_mask(spec: RingPhantomSpec, t: int = 0) -> np.ndarray:
    """Analytic wall membership at frame ``t``."""
    dist, _ = _polar_grid(spec)
    r = _radius_map(spec, t, sector_wedge(spec))
    half = spec.wall_thickness / 2
    return (dist >= r - half) & (dist <= r + half)


@dataclass
class GroundTruth:
    """Analytic description of a generated scene.

    ``points`` maps a label to its ``(N, 2)`` per-frame ``(x, y)`` positions.
    """

    kind: str
    fps: float
    frames: int
    points: dict = field(default_factory=dict)
    landmarks: dict = field(default_factory=dict)
    pause: Optional[tuple[int, int]] = None
    sector_mask: Optional[np.ndarray] = None
    series: dict = field(default_factory=dict)
    spec: dict = field(default_factory=dict)

    def displacement(self, label: str) -> np.ndarray:
        """Per-transition analytic displacement ``(N - 1, 2)`` of a point."""
        return np.diff(self.points[label], axis=0)

    @property
    def pause_frames(self) -> list[int]:
        if self.pause is None:
            return []
        start, length = self.pause
        return list(range(start, start + length))

    def to_dict(self) -> dict:
        out = {
            "kind": self.kind,
            "fps": self.fps,
            "frames": self.frames,
            "spec": self.spec,
            "landmarks": {k: [float(v[0]), float(v[1])] for k, v in self.landmarks.items()},
            "points": {k: np.asarray(v).tolist() for k, v in self.points.items()},
            "series": {k: np.asarray(v).tolist() for k, v in self.series.items()},
        }
        if self.pause is not None:
            start, length = self.pause
            out["pause"] = {"start": start, "length": length,
                            "seconds": length / self.fps}
        if self.sector_mask is not None:
            out["frozen_sector"] = {"mask": mask_to_rle(self.sector_mask),
                                    "pixels": int(self.sector_mask.sum())}
        return out

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)


def _spec_dict(spec) -> dict:
    d = asdict(spec)
    for k, v in d.items():
        if isinstance(v, tuple):
            d[k] = list(v)
    return d


def gen_pendulum(spec: PendulumSpec) -> tuple[ImageSequence, GroundTruth]:
    """Render the pendulum bob for every frame."""
    t = np.arange(spec.frames, dtype=np.float64)
    off = spec.offset(t)
    cx, cy = spec.equilibrium
    ux, uy = spec.axis
    px = cx + off * ux
    py = cy + off * uy
    sigma = spec.bob_radius / 2.0
    yy, xx = np.mgrid[0:spec.height, 0:spec.width].astype(np.float64)
    frames = np.empty((spec.frames, spec.height, spec.width))
    for n in range(spec.frames):
        d2 = (xx - px[n]) ** 2 + (yy - py[n]) ** 2
        frames[n] = spec.intensity * np.exp(-d2 / (2 * sigma * sigma))
    seq = ImageSequence(frames, spec.fps)
    gt = GroundTruth(
        kind="pendulum",
        fps=spec.fps,
        frames=spec.frames,
        points={"bob": np.column_stack([px, py])},
        landmarks={"equilibrium": (cx, cy)},
        series={"offset": off},
        spec={"type": "pendulum", **_spec_dict(spec)},
    )
    return seq, gt


def _speckle_factor(u: np.ndarray, contrast: float) -> np.ndarray:
    return 1.0 + contrast * (u - 0.5) * 2.0


def gen_ring(spec: RingPhantomSpec) -> tuple[ImageSequence, GroundTruth]:
    """Render the beating ring with seeded multiplicative speckle."""
    dist, ang = _polar_grid(spec)
    wedge = sector_wedge(spec)
    half = spec.wall_thickness / 2
    s = math.sqrt(2) * max(spec.edge_softness, 1e-6)
    rng = np.random.default_rng(int(spec.rng_seed))
    shape = (spec.height, spec.width)
    speckled = spec.speckle_contrast > 0
    tissue = speckled and spec.speckle_mode == "tissue"
    if tissue:
        u_bg = rng.random(shape)
        u_wall = rng.random(shape)
        r0 = _radius_map(spec, 0, wedge)
        cx, cy = spec.center
        cos_a, sin_a = np.cos(np.radians(ang)), np.sin(np.radians(ang))
    frames = np.empty((spec.frames,) + shape)
    for n in range(spec.frames):
        r = _radius_map(spec, n, wedge)
        profile = 0.5 * (erf((dist - (r - half)) / s) - erf((dist - (r + half)) / s))
        bg = np.full(shape, spec.background_intensity)
        wall = np.full(shape, spec.wall_intensity)
        if tissue:
            # wall speckle is carried radially with the wall: sample it at
            # the position this tissue point had in frame 0
            d0 = dist - r + r0
            x0 = cx + d0 * cos_a
            y0 = cy + d0 * sin_a
            u = ndimage.map_coordinates(u_wall, [y0, x0], order=1, mode="reflect")
            bg = bg * _speckle_factor(u_bg, spec.speckle_contrast)
            wall = wall * _speckle_factor(u, spec.speckle_contrast)
        img = bg + (wall - bg) * profile
        if speckled and not tissue:
            img = img * _speckle_factor(rng.random(shape), spec.speckle_contrast)
        frames[n] = np.clip(img, 0.0, 1.0)
    seq = ImageSequence(frames, spec.fps)

    t = np.arange(spec.frames)
    radius = ring_radius(spec, t)
    r0 = float(ring_radius(spec, 0))
    cx, cy = spec.center
    points = {}
    for a in (0, 90, 180, 270):
        frozen = spec.frozen_sector is not None and bool(_in_sector(np.float64(a), spec.frozen_sector))
        rr = np.full(spec.frames, r0) if frozen else radius
        rad = math.radians(a)
        points[f"wall_{a}"] = np.column_stack([cx + rr * math.cos(rad), cy + rr * math.sin(rad)])
    landmarks = {"center": (cx, cy)}
    for a in (0, 90, 180, 270):
        landmarks[f"wall_{a}"] = tuple(points[f"wall_{a}"][0])
    gt = GroundTruth(
        kind="ring",
        fps=spec.fps,
        frames=spec.frames,
        points=points,
        landmarks=landmarks,
        pause=spec.pause,
        sector_mask=(wedge & annulus_mask(spec, 0)) if spec.frozen_sector is not None else None,
        series={"radius": radius},
        spec={"type": "ring", **_spec_dict(spec)},
    )
    return seq, gt


def spec_from_dict(doc: dict):
    """Build a phantom spec from a JSON-like dict carrying ``"type"``."""
    doc = dict(doc)
    kind = doc.pop("type", None)
    cls = {"pendulum": PendulumSpec, "ring": RingPhantomSpec}.get(kind)
    if cls is None:
        raise PhantomError(f"unknown phantom type {kind!r} (expected 'pendulum' or 'ring')")
    known = set(cls.__dataclass_fields__)
    unknown = set(doc) - known
    if unknown:
        raise PhantomError(f"unknown {kind} fields: {sorted(unknown)}")
    for key in ("center", "pause", "frozen_sector"):
        if doc.get(key) is not None:
            doc[key] = tuple(doc[key])
    try:
        return cls(**doc)
    except TypeError as exc:
        raise PhantomError(str(exc)) from None


def generate(spec) -> tuple[ImageSequence, GroundTruth]:
    if isinstance(spec, PendulumSpec):
        return gen_pendulum(spec)
    if isinstance(spec, RingPhantomSpec):
        return gen_ring(spec)
    raise TypeError(f"not a phantom spec: {type(spec).__name__}")
