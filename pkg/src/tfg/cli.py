"""Command-line interface: ``tfg <subcommand> INPUT -o OUTDIR [options]``.

Exit status is 0 on success, 1 when an analysis step fails (for example an
empty segmentation) and 2 for usage or I/O problems.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import __version__
from .detect import DetectionError, write_json, write_variance_csv
from .flow import FlowError, FlowParams, compute_flow, flow_series, write_flow_csv
from .imgseq import SequenceError, load_sequence, save_sequence, write_frames
from .phantom import PhantomError, generate, spec_from_dict
from .pipeline import analyze_landmarks, analyze_pause, analyze_region, point_signals
from .render import write_landmark_png, write_overlay_png, write_variance_png
from .segment import (
    SegmentationError,
    SegmentConfig,
    pick_myocardial_point,
    segment_myocardium,
    write_mask_json,
    write_mask_png,
)
from .tfgcore import estimate_period, write_signal_csv

DEFAULT_FPS = 29.0

_FLOW_FLAGS = {
    "smoothness_weight": float,
    "gradient_weight": float,
    "pyramid_levels": int,
    "scale_factor": float,
    "iterations_per_level": int,
    "convergence_epsilon": float,
    "presmooth_sigma": float,
    "relaxation": float,
    "warps_per_level": int,
}


class UsageError(Exception):
    """Bad arguments or unreadable input: exit status 2."""


# --- argument parsing ----------------------------------------------------

def _threshold_arg(text):
    if text == "otsu":
        return text
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("expected 'otsu' or a number in [0, 1]") from None


def _add_io(p):
    p.add_argument("input", help="frame directory (PNG/PGM) or .tfgs container")
    p.add_argument("-o", "--out", required=True, help="output directory")
    p.add_argument("--fps", type=float, default=None,
                   help=f"frame rate; default {DEFAULT_FPS:g}, or the container's value")
    p.add_argument("--seed", type=int, default=0, help="recorded for provenance")


def _add_flow(p):
    g = p.add_argument_group("optical flow")
    defaults = FlowParams()
    for name, kind in _FLOW_FLAGS.items():
        g.add_argument("--" + name.replace("_", "-"), type=kind, default=getattr(defaults, name))


def _add_seg(p):
    g = p.add_argument_group("segmentation")
    d = SegmentConfig()
    g.add_argument("--seg-sigma", type=float, default=d.sigma)
    g.add_argument("--seg-threshold", type=_threshold_arg, default=d.threshold)
    g.add_argument("--closing-radius", type=int, default=d.closing_radius)
    g.add_argument("--max-hole-area", type=int, default=d.max_hole_area)


def _add_mode(p):
    p.add_argument("--mode", choices=("fixed", "tracked"), default="fixed")


def _add_point(p):
    p.add_argument("--point", type=int, nargs=2, metavar=("X", "Y"), default=None,
                   help="analysed pixel; default is the myocardial point of frame 1")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tfg", description="Temporal flow graph analysis")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phantom", help="render a synthetic sequence from a JSON spec")
    p.add_argument("spec", help="phantom spec JSON with a 'type' of 'pendulum' or 'ring'")
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--seed", type=int, default=None, help="overrides a ring spec's rng_seed")
    p.add_argument("--frame-format", choices=("png", "pgm"), default="png")

    p = sub.add_parser("flow", help="dense flow between consecutive frames")
    _add_io(p)
    _add_flow(p)
    p.add_argument("--pair", type=int, action="append", default=None, metavar="N",
                   help="only export flow from frame N to N+1 (1-based, repeatable)")

    p = sub.add_parser("tfg", help="IDG and TFG of one point")
    _add_io(p)
    _add_flow(p)
    _add_seg(p)
    _add_mode(p)
    _add_point(p)

    p = sub.add_parser("pause", help="beat-pause detection")
    _add_io(p)
    _add_flow(p)
    _add_seg(p)
    _add_mode(p)
    _add_point(p)
    p.add_argument("--threshold", type=float, default=0.2, help="variance threshold T")
    p.add_argument("--window", type=int, default=8)
    p.add_argument("--shift", type=int, default=1)
    p.add_argument("--min-length", type=int, default=None, help="default: the window")

    p = sub.add_parser("region", help="abnormal (non-coherent) region detection")
    _add_io(p)
    _add_flow(p)
    _add_seg(p)
    _add_mode(p)
    p.add_argument("--rel-threshold", type=float, default=0.2)
    p.add_argument("--opening-radius", type=int, default=1)

    p = sub.add_parser("landmarks", help="cavity and valve landmark candidates")
    _add_io(p)
    _add_flow(p)
    _add_seg(p)
    _add_mode(p)
    p.add_argument("--suppression-radius", type=float, default=10.0)
    p.add_argument("--roi", choices=("heart", "myocardium", "full"), default="heart")
    return parser


# --- helpers -------------------------------------------------------------

def _flow_params(args) -> FlowParams:
    return FlowParams(**{name: getattr(args, name) for name in _FLOW_FLAGS})


def _seg_config(args) -> SegmentConfig:
    return SegmentConfig(args.seg_sigma, args.seg_threshold, args.closing_radius, args.max_hole_area)


def _load(args):
    path = Path(args.input)
    if not path.exists():
        raise UsageError(f"input not found: {path}")
    fps = args.fps
    if fps is None and path.is_dir():
        fps = DEFAULT_FPS
    try:
        return load_sequence(path, fps)
    except (SequenceError, OSError) as exc:
        raise UsageError(str(exc)) from None


def _outdir(args) -> Path:
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create output directory: {exc}") from None
    return out


def _config(args, seq, **extra) -> dict:
    """Effective configuration recorded in every JSON output."""
    cfg = {"command": args.command, "input": str(args.input), "fps": seq.fps,
           "frames": len(seq), "seed": args.seed, "flow": asdict(_flow_params(args))}
    if hasattr(args, "seg_sigma"):
        cfg["segmentation"] = asdict(_seg_config(args))
    if hasattr(args, "mode"):
        cfg["mode"] = args.mode
    cfg.update(extra)
    return cfg


# --- subcommands -----------------------------------------------------------

def cmd_phantom(args) -> int:
    try:
        doc = json.loads(Path(args.spec).read_text())
    except FileNotFoundError:
        raise UsageError(f"spec not found: {args.spec}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed spec JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise UsageError("spec JSON must be an object")
    try:
        spec = spec_from_dict(doc)
        if args.seed is not None and hasattr(spec, "rng_seed"):
            spec = replace(spec, rng_seed=args.seed)
    except PhantomError as exc:
        raise UsageError(f"invalid spec: {exc}") from None
    seq, gt = generate(spec)
    out = _outdir(args)
    save_sequence(seq, out / "sequence.tfgs")
    write_frames(seq, out / "frames", fmt=args.frame_format)
    gt.to_json(out / "ground_truth.json")
    return 0


def cmd_flow(args) -> int:
    seq = _load(args)
    params = _flow_params(args)
    out = _outdir(args)
    pairs = args.pair or list(range(1, len(seq)))
    bad = [n for n in pairs if not 1 <= n < len(seq)]
    if bad:
        raise UsageError(f"pair indices {bad} outside 1..{len(seq) - 1}")
    summary = []
    for n in sorted(set(pairs)):
        f = compute_flow(seq[n - 1], seq[n], params)
        name = f"flow_{n:04d}.csv"
        write_flow_csv(f, out / name)
        mag = f.magnitude()
        summary.append({"pair": n, "file": name, "max_magnitude": float(mag.max()),
                        "mean_magnitude": float(mag.mean())})
    write_json({"config": _config(args, seq, pairs=sorted(set(pairs))), "flows": summary},
               out / "flow.json")
    return 0


def _resolve_point(args, seq):
    if args.point is not None:
        return tuple(args.point)
    return pick_myocardial_point(segment_myocardium(seq[0], _seg_config(args)))


def cmd_tfg(args) -> int:
    seq = _load(args)
    out = _outdir(args)
    point = _resolve_point(args, seq)
    flows = flow_series(seq, _flow_params(args))
    d, t = point_signals(seq, point, flows, args.mode)
    write_signal_csv(d, out / "idg.csv")
    write_signal_csv(t, out / "tfg.csv")
    write_json({"config": _config(args, seq, point=list(point)),
                "period_frames": estimate_period(t),
                "samples": len(t)}, out / "tfg.json")
    return 0


def cmd_pause(args) -> int:
    seq = _load(args)
    out = _outdir(args)
    point = _resolve_point(args, seq)
    res = analyze_pause(seq, _flow_params(args), _seg_config(args), args.mode, point,
                        args.threshold, args.window, args.shift, args.min_length)
    write_signal_csv(res.tfg, out / "tfg.csv")
    stv = res.report.variance
    with open(out / "stv.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["window_start", "variance"])
        for j, v in enumerate(stv):
            # window j covers TFG samples starting at j * shift (1-based frame numbering)
            w.writerow([j * args.shift + 1, repr(float(v))])
    with open(out / "pause_plot.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["frame", "tfg", "stv", "paused"])
        paused = np.zeros(len(res.tfg), dtype=bool)
        for iv in res.report.intervals:
            paused[iv.start:iv.start + iv.length] = True
        by_start = {j * args.shift: float(v) for j, v in enumerate(stv)}
        for k, value in enumerate(res.tfg.values):
            s = by_start.get(k)
            w.writerow([k + 1, repr(float(value)), "" if s is None else repr(s), int(paused[k])])
    doc = res.report.to_dict()
    doc["config"] = _config(args, seq, point=list(res.point), threshold=args.threshold,
                            window=args.window, shift=args.shift,
                            min_length=res.report.min_length)
    write_json(doc, out / "pause_report.json")
    return 0


def cmd_region(args) -> int:
    seq = _load(args)
    out = _outdir(args)
    res = analyze_region(seq, _flow_params(args), _seg_config(args), args.mode,
                         args.rel_threshold, args.opening_radius)
    write_mask_png(res.mask, out / "mask.png")
    write_mask_json(res.mask, out / "mask.json")
    write_mask_png(res.abnormal, out / "abnormal_mask.png")
    write_mask_json(res.abnormal, out / "abnormal_mask.json")
    write_variance_csv(res.vmap, out / "variance.csv")
    write_variance_png(res.vmap, out / "variance.png")
    write_overlay_png(seq[0], res.abnormal, out / "abnormal_overlay.png")
    centroid = res.centroid
    write_json({
        "config": _config(args, seq, rel_threshold=args.rel_threshold,
                          opening_radius=args.opening_radius),
        "abnormal_count": res.count,
        "abnormal_centroid": None if centroid is None else list(centroid),
        "mask_pixels": int(res.mask.sum()),
        "median_variance": float(np.median(res.vmap.values[res.mask])),
    }, out / "region.json")
    return 0


def cmd_landmarks(args) -> int:
    seq = _load(args)
    out = _outdir(args)
    res = analyze_landmarks(seq, _flow_params(args), _seg_config(args), args.mode,
                            args.roi, args.suppression_radius)
    doc = res.landmarks.to_dict()
    doc["config"] = _config(args, seq, roi=args.roi, suppression_radius=args.suppression_radius)
    write_json(doc, out / "landmarks.json")
    write_variance_csv(res.vmap, out / "variance.csv")
    write_variance_png(res.vmap, out / "variance.png")
    write_landmark_png(seq[0], res.landmarks, out / "landmarks.png")
    return 0


COMMANDS = {
    "phantom": cmd_phantom,
    "flow": cmd_flow,
    "tfg": cmd_tfg,
    "pause": cmd_pause,
    "region": cmd_region,
    "landmarks": cmd_landmarks,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        # validate parameters before any work
        if hasattr(args, "smoothness_weight"):
            _flow_params(args)
        if hasattr(args, "seg_sigma"):
            _seg_config(args)
        return COMMANDS[args.command](args)
    except (DetectionError, SegmentationError) as exc:
        print(f"tfg {args.command}: analysis failed: {exc}", file=sys.stderr)
        return 1
    except (UsageError, FlowError, ValueError) as exc:
        print(f"tfg {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"tfg {args.command}: I/O error: {exc}", file=sys.stderr)
        return 2

if __name__ == "__main__":
    sys.exit(main())
