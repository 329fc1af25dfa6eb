"""Dense variational optical flow between consecutive frames.

The estimator minimizes, per pyramid level, a quadratic energy made of

* a brightness-constancy data term ``(Ix*du + Iy*dv + It)**2``,
* a gradient-constancy data term (weighted by ``gradient_weight``) on the
  linearized difference of image gradients,
* a first-order smoothness term on the total flow (weighted by
  ``smoothness_weight``), summed over 4-neighbour edges.

The second frame is warped toward the first with the current flow at the
start of each level and the linearized problem is relaxed with red-black
block SOR, which never increases the level energy.  Intensities are scaled
to the 8-bit range inside the solver so that the default weights keep the
same meaning as in the usual variational-flow literature.

Coordinates: ``vx`` runs along columns, ``vy`` along rows (down the image).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import ndimage

__all__ = [
    "FlowError",
    "FlowParams",
    "FlowField",
    "PolarFlow",
    "LevelTrace",
    "compute_flow",
    "to_polar",
    "flow_series",
    "flow_energy",
    "sample_bilinear",
    "write_flow_csv",
]

_INTENSITY_SCALE = 255.0
_MIN_LEVEL_SIZE = 6


class FlowError(ValueError):
    """Invalid frames or parameters for flow estimation."""


@dataclass(frozen=True)
class FlowParams:
    """Configuration of the flow energy and its solver.

    ``presmooth_sigma`` is the Gaussian pre-filter (pixels) applied to both
    frames before differentiation; ``relaxation`` is the SOR factor in (0, 2).
    """

    smoothness_weight: float = 15.0
    gradient_weight: float = 1.0
    pyramid_levels: int = 4
    scale_factor: float = 0.5
    iterations_per_level: int = 100
    convergence_epsilon: float = 1e-4
    presmooth_sigma: float = 1.0
    relaxation: float = 1.9
    warps_per_level: int = 1

    def __post_init__(self):
        if not self.smoothness_weight > 0:
            raise FlowError("smoothness_weight must be > 0")
        if not self.gradient_weight >= 0:
            raise FlowError("gradient_weight must be >= 0")
        if int(self.pyramid_levels) != self.pyramid_levels or self.pyramid_levels < 1:
            raise FlowError("pyramid_levels must be an integer >= 1")
        if not 0 < self.scale_factor < 1:
            raise FlowError("scale_factor must lie in (0, 1)")
        if int(self.iterations_per_level) != self.iterations_per_level or self.iterations_per_level < 1:
            raise FlowError("iterations_per_level must be an integer >= 1")
        if not self.convergence_epsilon > 0:
            raise FlowError("convergence_epsilon must be > 0")
        if not self.presmooth_sigma >= 0:
            raise FlowError("presmooth_sigma must be >= 0")
        if not 0 < self.relaxation < 2:
            raise FlowError("relaxation must lie in (0, 2)")
        if int(self.warps_per_level) != self.warps_per_level or self.warps_per_level < 1:
            raise FlowError("warps_per_level must be an integer >= 1")


@dataclass(frozen=True, eq=False)
class FlowField:
    """Per-pixel displacement (pixels/frame) from one frame to the next."""

    vx: np.ndarray
    vy: np.ndarray

    def __post_init__(self):
        vx = np.array(self.vx, dtype=np.float64)
        vy = np.array(self.vy, dtype=np.float64)
        if vx.ndim != 2 or vx.shape != vy.shape:
            raise FlowError(f"vx/vy shapes differ or are not 2-D: {vx.shape} vs {vy.shape}")
        if not (np.all(np.isfinite(vx)) and np.all(np.isfinite(vy))):
            raise FlowError("flow contains non-finite entries")
        vx.flags.writeable = False
        vy.flags.writeable = False
        object.__setattr__(self, "vx", vx)
        object.__setattr__(self, "vy", vy)

    @classmethod
    def zeros(cls, shape) -> "FlowField":
        return cls(np.zeros(shape), np.zeros(shape))

    @classmethod
    def uniform(cls, shape, vx: float, vy: float) -> "FlowField":
        return cls(np.full(shape, float(vx)), np.full(shape, float(vy)))

    @property
    def shape(self) -> tuple[int, int]:
        return self.vx.shape

    @property
    def width(self) -> int:
        return self.vx.shape[1]

    @property
    def height(self) -> int:
        return self.vx.shape[0]

    def magnitude(self) -> np.ndarray:
        return np.hypot(self.vx, self.vy)


@dataclass(frozen=True, eq=False)
class PolarFlow:
    """Magnitude (pixels/frame) and direction (degrees in [-180, 180))."""

    magnitude: np.ndarray
    angle: np.ndarray


@dataclass
class LevelTrace:
    """Diagnostics of one linearization stage of a pyramid level.

    ``energies`` holds the linearized energy after each sweep; ``energies[0]``
    is the energy of the incoming flow.
    """

    level: int
    shape: tuple[int, int]
    energies: list = field(default_factory=list)
    iterations: int = 0
    warp: int = 0


def to_polar(field: FlowField) -> PolarFlow:
    """Decompose a flow field into magnitude and angle in degrees.

    The angle is ``atan2(vy, vx)`` mapped to ``[-180, 180)``; the zero vector
    gets angle 0.
    """
    mag = np.hypot(field.vx, field.vy)
    ang = np.degrees(np.arctan2(field.vy, field.vx))
    ang = np.where(ang >= 180.0, ang - 360.0, ang)
    ang = np.where(mag == 0.0, 0.0, ang)
    return PolarFlow(mag, ang)


# --- image helpers -----------------------------------------------------------

def _gradient(img: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # central differences on an edge-replicated border
    p = np.pad(img, 1, mode="edge")
    gx = 0.5 * (p[1:-1, 2:] - p[1:-1, :-2])
    gy = 0.5 * (p[2:, 1:-1] - p[:-2, 1:-1])
    return gx, gy


def sample_bilinear(grid: np.ndarray, x, y) -> np.ndarray:
    """Bilinear sample of ``grid[y, x]`` at real coordinates, edge-clamped."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    coords = np.array([y.reshape(-1), x.reshape(-1)])
    out = ndimage.map_coordinates(grid, coords, order=1, mode="nearest")
    return out.reshape(x.shape)


def _warp(img: np.ndarray, u: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    h, w = img.shape
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    xs = xx + u
    ys = yy + v
    inside = (xs >= 0) & (xs <= w - 1) & (ys >= 0) & (ys <= h - 1)
    return sample_bilinear(img, xs, ys), inside


def _resample(img: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    # pixel-centre aligned bilinear resize
    h, w = img.shape
    nh, nw = shape
    ys = (np.arange(nh) + 0.5) * (h / nh) - 0.5
    xs = (np.arange(nw) + 0.5) * (w / nw) - 0.5
    yy, xx = np.meshgrid(ys, xs, indexing="ij")
    return sample_bilinear(img, xx, yy)


def _level_shapes(shape: tuple[int, int], params: FlowParams) -> list[tuple[int, int]]:
    h, w = shape
    shapes = [(h, w)]
    for level in range(1, int(params.pyramid_levels)):
        s = params.scale_factor ** level
        nh, nw = int(round(h * s)), int(round(w * s))
        if min(nh, nw) < _MIN_LEVEL_SIZE:
            break
        shapes.append((nh, nw))
    return shapes


def _pyramid(img: np.ndarray, shapes: list[tuple[int, int]]) -> list[np.ndarray]:
    out = [img]
    h = img.shape[0]
    for shape in shapes[1:]:
        s = shape[0] / h
        sigma = 0.5 * np.sqrt(1.0 / s**2 - 1.0)
        out.append(_resample(ndimage.gaussian_filter(img, sigma, mode="nearest"), shape))
    return out


def _neighbour_sum(a: np.ndarray) -> np.ndarray:
    s = np.zeros_like(a)
    s[1:, :] += a[:-1, :]
    s[:-1, :] += a[1:, :]
    s[:, 1:] += a[:, :-1]
    s[:, :-1] += a[:, 1:]
    return s


def _neighbour_count(shape: tuple[int, int]) -> np.ndarray:
    return _neighbour_sum(np.ones(shape))


# --- linearized level problem -------------------------------------------------

@dataclass
class _LevelSystem:
    """Per-pixel quadratic data term ``d^T J d + 2 b^T d + c`` plus smoothness."""

    j11: np.ndarray
    j12: np.ndarray
    j22: np.ndarray
    b1: np.ndarray
    b2: np.ndarray
    c: np.ndarray
    alpha: float

    def energy(self, u0, v0, du, dv) -> float:
        data = (self.j11 * du * du + 2 * self.j12 * du * dv + self.j22 * dv * dv
                + 2 * (self.b1 * du + self.b2 * dv) + self.c)
        u = u0 + du
        v = v0 + dv
        smooth = (np.sum(np.diff(u, axis=0) ** 2) + np.sum(np.diff(u, axis=1) ** 2)
                  + np.sum(np.diff(v, axis=0) ** 2) + np.sum(np.diff(v, axis=1) ** 2))
        return float(np.sum(data) + self.alpha * smooth)


def _linearize(i1, i2, u0, v0, gamma: float, alpha: float) -> _LevelSystem:
    i2w, inside = _warp(i2, u0, v0)
    g1x, g1y = _gradient(i1)
    g2x, g2y = _gradient(i2w)
    ix = 0.5 * (g1x + g2x)
    iy = 0.5 * (g1y + g2y)
    it = i2w - i1
    ixx, ixy_a = _gradient(ix)
    iyx_b, iyy = _gradient(iy)
    ixy = 0.5 * (ixy_a + iyx_b)
    rx = g2x - g1x
    ry = g2y - g1y

    m = inside.astype(np.float64)
    j11 = m * (ix * ix + gamma * (ixx * ixx + ixy * ixy))
    j12 = m * (ix * iy + gamma * (ixx * ixy + ixy * iyy))
    j22 = m * (iy * iy + gamma * (ixy * ixy + iyy * iyy))
    b1 = m * (ix * it + gamma * (ixx * rx + ixy * ry))
    b2 = m * (iy * it + gamma * (ixy * rx + iyy * ry))
    c = m * (it * it + gamma * (rx * rx + ry * ry))
    return _LevelSystem(j11, j12, j22, b1, b2, c, alpha)


def _relax(system: _LevelSystem, u0, v0, params: FlowParams,
           trace: Optional[LevelTrace]) -> tuple[np.ndarray, np.ndarray]:
    alpha = system.alpha
    omega = params.relaxation
    shape = u0.shape
    n = _neighbour_count(shape)
    a11 = system.j11 + alpha * n
    a22 = system.j22 + alpha * n
    a12 = system.j12
    det = a11 * a22 - a12 * a12
    ru0 = -system.b1 - alpha * n * u0
    rv0 = -system.b2 - alpha * n * v0

    yy, xx = np.indices(shape)
    colours = [(yy + xx) % 2 == 0, (yy + xx) % 2 == 1]

    du = np.zeros(shape)
    dv = np.zeros(shape)
    if trace is not None:
        trace.energies.append(system.energy(u0, v0, du, dv))
    for it in range(int(params.iterations_per_level)):
        change = 0.0
        for colour in colours:
            # exact block minimizer for this colour given the other colour
            su = _neighbour_sum(u0 + du)
            sv = _neighbour_sum(v0 + dv)
            ru = ru0 + alpha * su
            rv = rv0 + alpha * sv
            tu = (a22 * ru - a12 * rv) / det
            tv = (a11 * rv - a12 * ru) / det
            step_u = omega * (tu - du)
            step_v = omega * (tv - dv)
            step_u[~colour] = 0.0
            step_v[~colour] = 0.0
            du += step_u
            dv += step_v
            change = max(change, float(np.max(np.abs(step_u))), float(np.max(np.abs(step_v))))
        if trace is not None:
            trace.energies.append(system.energy(u0, v0, du, dv))
            trace.iterations = it + 1
        if change < params.convergence_epsilon:
            break
    return u0 + du, v0 + dv


def _check_pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or a.shape != b.shape:
        raise FlowError(f"frame dimensions differ: {a.shape} vs {b.shape}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise FlowError("frames contain non-finite intensities")
    return a, b


def _prepare(img: np.ndarray, params: FlowParams) -> np.ndarray:
    img = img * _INTENSITY_SCALE
    if params.presmooth_sigma > 0:
        img = ndimage.gaussian_filter(img, params.presmooth_sigma, mode="nearest")
    return img


def compute_flow(a, b, params: FlowParams | None = None,
                 trace: list | None = None) -> FlowField:
    """Estimate the flow mapping frame ``a`` onto frame ``b``.

    Parameters
    ----------
    a, b : ndarray, shape (H, W)
        Consecutive frames with intensities in [0, 1].
    params : FlowParams, optional
        Energy weights and solver settings; defaults when omitted.
    trace : list, optional
        When given, one :class:`LevelTrace` per pyramid level (coarse to
        fine) is appended to it.

    Returns
    -------
    FlowField
        ``b(x + vx, y + vy) ~ a(x, y)``.
    """
    params = params or FlowParams()
    a, b = _check_pair(a, b)
    shapes = _level_shapes(a.shape, params)
    pa = _pyramid(_prepare(a, params), shapes)
    pb = _pyramid(_prepare(b, params), shapes)

    u = np.zeros(shapes[-1])
    v = np.zeros(shapes[-1])
    for level in range(len(shapes) - 1, -1, -1):
        shape = shapes[level]
        if u.shape != shape:
            sy = shape[0] / u.shape[0]
            sx = shape[1] / u.shape[1]
            u = _resample(u, shape) * sx
            v = _resample(v, shape) * sy
        for warp in range(int(params.warps_per_level)):
            system = _linearize(pa[level], pb[level], u, v,
                                params.gradient_weight, params.smoothness_weight)
            lt = LevelTrace(level, shape, warp=warp) if trace is not None else None
            u, v = _relax(system, u, v, params, lt)
            if trace is not None:
                trace.append(lt)
    return FlowField(u, v)


def flow_energy(a, b, field: FlowField, params: FlowParams | None = None) -> float:
    """Energy of ``field`` on the finest level, linearized around zero flow."""
    params = params or FlowParams()
    a, b = _check_pair(a, b)
    pa, pb = _prepare(a, params), _prepare(b, params)
    zero = np.zeros(a.shape)
    system = _linearize(pa, pb, zero, zero, params.gradient_weight, params.smoothness_weight)
    return system.energy(zero, zero, np.asarray(field.vx), np.asarray(field.vy))


def flow_series(seq, params: FlowParams | None = None) -> list[FlowField]:
    """Flow between each pair of consecutive frames; ``N - 1`` fields."""
    frames = seq.frames if hasattr(seq, "frames") else np.asarray(seq)
    if len(frames) < 2:
        raise FlowError("need at least 2 frames")
    return [compute_flow(frames[i], frames[i + 1], params) for i in range(len(frames) - 1)]


def write_flow_csv(field: FlowField, path) -> None:
    """Write ``x,y,vx,vy`` rows in row-major order."""
    h, w = field.shape
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "vx", "vy"])
        for y in range(h):
            for x in range(w):
                writer.writerow([x, y, repr(float(field.vx[y, x])), repr(float(field.vy[y, x]))])
