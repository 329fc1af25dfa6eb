"""Grayscale image sequences: validation, frame-directory loading and the raw
``TFGS`` container.

Frames are held as 2-D ``float64`` arrays of intensities in ``[0, 1]``,
indexed ``frame[y, x]`` (row, column).  The y axis therefore follows the row
index and points down the image.
"""
from __future__ import annotations

import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

__all__ = [
    "SequenceError",
    "ImageSequence",
    "as_frame",
    "load_sequence",
    "save_sequence",
    "read_frame",
    "write_frame_png",
    "write_frames",
    "MAGIC",
    "HEADER_SIZE",
]

MAGIC = b"TFGS"
_HEADER = struct.Struct("<4sIIId")
HEADER_SIZE = _HEADER.size

FRAME_SUFFIXES = (".png", ".pgm")


class SequenceError(ValueError):
    """Invalid frame data or an unreadable sequence."""


def as_frame(data) -> np.ndarray:
    """Validate ``data`` as a single frame and return a read-only float copy."""
    arr = np.array(data, dtype=np.float64)
    if arr.ndim != 2:
        raise SequenceError(f"frame must be 2-D, got shape {arr.shape}")
    if arr.size == 0:
        raise SequenceError("frame is empty")
    if not np.all(np.isfinite(arr)):
        raise SequenceError("frame contains non-finite intensities")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise SequenceError("frame intensities must lie in [0, 1]")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class ImageSequence:
    """Immutable stack of equally sized frames with a frame rate.

    Parameters
    ----------
    frames : array_like, shape (N, H, W)
        Intensities in [0, 1]. ``N >= 2``.
    fps : float
        Frames per second, strictly positive.
    """

    frames: np.ndarray
    fps: float

    def __post_init__(self):
        frames = self.frames
        if isinstance(frames, (list, tuple)):
            shapes = {np.shape(f) for f in frames}
            if len(shapes) > 1:
                raise SequenceError(f"mixed frame dimensions: {sorted(shapes)}")
        arr = np.array(frames, dtype=np.float64)
        if arr.ndim != 3:
            raise SequenceError(f"frames must stack to (N, H, W), got {arr.shape}")
        if arr.shape[0] < 2:
            raise SequenceError("a sequence needs at least 2 frames")
        if arr.shape[1] == 0 or arr.shape[2] == 0:
            raise SequenceError("frames are empty")
        if not np.all(np.isfinite(arr)):
            raise SequenceError("frames contain non-finite intensities")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise SequenceError("frame intensities must lie in [0, 1]")
        fps = float(self.fps)
        if not np.isfinite(fps) or fps <= 0:
            raise SequenceError(f"fps must be > 0, got {self.fps!r}")
        arr.flags.writeable = False
        object.__setattr__(self, "frames", arr)
        object.__setattr__(self, "fps", fps)

    def __len__(self) -> int:
        return self.frames.shape[0]

    def __getitem__(self, index) -> np.ndarray:
        return self.frames[index]

    def __iter__(self):
        return iter(self.frames)

    @property
    def width(self) -> int:
        return self.frames.shape[2]

    @property
    def height(self) -> int:
        return self.frames.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        """Frame shape as ``(height, width)``."""
        return self.frames.shape[1:]

    @property
    def duration(self) -> float:
        """Duration in seconds spanned by the frame count."""
        return len(self) / self.fps


def read_frame(path) -> np.ndarray:
    """Read one 8-bit grayscale PNG/PGM and scale to [0, 1]."""
    with Image.open(path) as img:
        if img.mode not in ("L", "P", "1", "I;16", "I"):
            raise SequenceError(f"{path}: color image (mode {img.mode}) rejected")
        if img.mode == "P":
            raise SequenceError(f"{path}: palette image rejected")
        data = np.asarray(img)
    if data.dtype == np.bool_:
        return data.astype(np.float64)
    if data.dtype != np.uint8:
        raise SequenceError(f"{path}: only 8-bit grayscale frames are supported")
    return data.astype(np.float64) / 255.0


def _frame_files(directory: Path) -> list[Path]:
    files = [p for p in directory.iterdir() if p.suffix.lower() in FRAME_SUFFIXES]
    return sorted(files, key=lambda p: p.name)


def load_sequence(path, fps: float | None = None) -> ImageSequence:
    """Load a sequence from a frame directory or a raw container file.

    Parameters
    ----------
    path : str or Path
        Either a directory of PNG/PGM frames (ordered by file name) or a
        ``TFGS`` container written by :func:`save_sequence`.
    fps : float, optional
        Frame rate. Required for directories; for containers it overrides
        the stored value when given.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such sequence: {path}")
    if path.is_dir():
        if fps is None:
            raise SequenceError("fps is required when loading a frame directory")
        files = _frame_files(path)
        if len(files) < 2:
            raise SequenceError(f"{path}: need at least 2 frames, found {len(files)}")
        frames = [read_frame(f) for f in files]
        return ImageSequence(frames, fps)
    return _read_container(path, fps)


def _read_container(path: Path, fps: float | None) -> ImageSequence:
    blob = path.read_bytes()
    if len(blob) < HEADER_SIZE:
        raise SequenceError(f"{path}: truncated header")
    magic, width, height, count, stored_fps = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise SequenceError(f"{path}: bad magic {magic!r}")
    expected = HEADER_SIZE + 8 * width * height * count
    if len(blob) != expected:
        raise SequenceError(f"{path}: expected {expected} bytes, found {len(blob)}")
    payload = np.frombuffer(blob, dtype="<f8", offset=HEADER_SIZE)
    frames = payload.reshape(count, height, width)
    return ImageSequence(frames, stored_fps if fps is None else fps)


def save_sequence(seq: ImageSequence, path) -> None:
    """Write ``seq`` as a ``TFGS`` container (lossless float64)."""
    path = Path(path)
    n, h, w = seq.frames.shape
    header = _HEADER.pack(MAGIC, w, h, n, seq.fps)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(seq.frames.astype("<f8").tobytes(order="C"))


def _to_uint8(frame: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(np.asarray(frame) * 255.0), 0, 255).astype(np.uint8)


def write_frame_png(frame: np.ndarray, path) -> None:
    """Write a [0, 1] frame as an 8-bit grayscale PNG."""
    Image.fromarray(_to_uint8(frame)).save(path)


def write_frames(seq: ImageSequence, directory, fmt: str = "png") -> list[Path]:
    """Write every frame as ``frame_00000.<fmt>`` (8-bit, lossy in precision)."""
    directory = Path(directory)
    os.makedirs(directory, exist_ok=True)
    fmt = fmt.lower()
    if fmt not in ("png", "pgm"):
        raise ValueError(f"unsupported frame format {fmt!r}")
    digits = max(5, len(str(len(seq))))
    out = []
    for i, frame in enumerate(seq.frames):
        p = directory / f"frame_{i:0{digits}d}.{fmt}"
        Image.fromarray(_to_uint8(frame)).save(p)
        out.append(p)
    return out
