"""Command-line surface: ``synth``, ``track``, ``eval`` and
``render-overlay`` subcommands.

Option precedence is flags over config file over built-in defaults.  The
config file holds ``key = value`` lines, ``#`` starts a comment, unknown
keys are rejected by name and type errors mention the line number.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from . import io as vio
from .core import TrackerConfig, DaisyParams
from .metrics import aggregate, format_table, match_counts, metrics
from .synth import SynthParams, gen_tree, render_sequence
from .tracker import track_sequence

__all__ = ["main", "load_config", "build_tracker_config"]


class ConfigError(ValueError):
    pass


def _parse_bool(v: str) -> bool:
    if v.lower() in ("1", "true", "yes", "on"):
        return True
    if v.lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(v)


def _parse_scales(v: str) -> tuple[float, ...]:
    return tuple(float(x) for x in v.replace(",", " ").split())


CONFIG_KEYS = {
    "sigma": float,
    "n": int,
    "rho": float,
    "scales": _parse_scales,
    "max_gap": float,
    "max_paths": int,
    "fusion": _parse_bool,
    "stride": int,
    "seed": int,
    "snap_radius": float,
    "nms_threshold": float,
    "resample_spacing": float,
    "max_displacement": float,
    "daisy_radius": float,
    "daisy_rings": int,
    "daisy_ring_samples": int,
    "daisy_bins": int,
    "gap_w1": float,
    "gap_w2": float,
    "gap_w3": float,
    "gap_cost_ceiling": float,
}


def load_config(path) -> dict:
    """Parse a config file into typed values; unknown keys and type
    mismatches raise :class:`ConfigError` naming the offender."""
    out: dict = {}
    text = Path(path).read_text()
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{ln}: expected 'key = value', got {raw.strip()!r}")
        k, v = (s.strip() for s in line.split("=", 1))
        if k not in CONFIG_KEYS:
            raise ConfigError(f"{path}:{ln}: unknown key '{k}'")
        try:
            out[k] = CONFIG_KEYS[k](v)
        except ValueError:
            raise ConfigError(
                f"{path}:{ln}: bad value {v!r} for '{k}' (expected {CONFIG_KEYS[k].__name__})"
            ) from None
    return out


def build_tracker_config(cfg: dict) -> TrackerConfig:
    daisy = DaisyParams(
        radius=cfg.get("daisy_radius", 15.0),
        rings=cfg.get("daisy_rings", 3),
        ring_samples=cfg.get("daisy_ring_samples", 8),
        bins=cfg.get("daisy_bins", 8),
    )
    weights = (cfg.get("gap_w1", 0.4), cfg.get("gap_w2", 0.4), cfg.get("gap_w3", 0.2))
    kw = dict(
        sigma=cfg.get("sigma", 5.0),
        n_nearest=cfg.get("n", 2),
        rho=cfg.get("rho", 3.0),
        daisy=daisy,
        gap_weights=weights,
    )
    for src, dst in [("scales", "scales"), ("max_gap", "max_gap"), ("max_paths", "max_paths"),
                     ("fusion", "fusion"), ("snap_radius", "snap_radius"),
                     ("nms_threshold", "nms_threshold"), ("resample_spacing", "resample_spacing"),
                     ("max_displacement", "max_displacement"), ("gap_cost_ceiling", "gap_cost_ceiling")]:
        if src in cfg:
            kw[dst] = cfg[src]
    return TrackerConfig(**kw)


def _merge_options(args, flag_names: list[str]) -> dict:
    cfg = load_config(args.config) if getattr(args, "config", None) else {}
    for name in flag_names:
        v = getattr(args, name.replace("-", "_"), None)
        if v is not None:
            cfg[name] = v
    return cfg


def _cmd_synth(args) -> int:
    cfg = _merge_options(args, ["seed"])
    params = SynthParams(
        seed=cfg.get("seed", 7),
        size=(args.size, args.size),
        frames=args.frames,
        frames_per_cycle=args.fpc,
        branches=args.branches,
        depth=args.depth,
        width=args.width,
        contrast=args.contrast,
        noise=args.noise,
        amplitude=args.amplitude,
        gradient=args.gradient,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    tree = gen_tree(params)
    frames, truths = render_sequence(tree, params)
    names = []
    for t, (frame, ann) in enumerate(zip(frames, truths)):
        name = f"frame{t:03d}.png"
        vio.save_frame(frame, out / name)
        vio.save_annotation(ann, out / f"frame{t:03d}.ann")
        names.append(name)
    vio.write_manifest(out, names, {
        "seed": params.seed, "frames": params.frames, "size": list(params.size),
        "branches": params.branches, "depth": params.depth, "width": params.width,
        "contrast": params.contrast, "noise": params.noise,
        "amplitude": params.amplitude, "frames_per_cycle": params.frames_per_cycle,
    })
    print(f"wrote {len(frames)} frames + ground truth to {out}")
    return 0


def _cmd_track(args) -> int:
    cfg_map = _merge_options(args, ["sigma", "n", "stride"])
    if args.no_fusion:
        cfg_map["fusion"] = False
    stride = cfg_map.pop("stride", 1)
    if stride < 1:
        raise ConfigError("stride must be >= 1")
    cfg_map.pop("seed", None)
    cfg = build_tracker_config(cfg_map)

    frames, _names = vio.load_sequence(args.seq)
    initial = vio.load_annotation(args.ann)
    h, w = frames[0].shape
    pts = initial.all_points()
    if pts[:, 0].max() >= w or pts[:, 1].max() >= h or pts.min() < 0:
        raise vio.FormatError(f"{args.ann}: annotation points fall outside the {w}x{h} frames")

    indices = list(range(0, len(frames), stride))
    if len(indices) < 2:
        raise vio.FormatError(f"sequence of {len(frames)} frames has nothing to track at stride {stride}")
    sub_frames = [frames[i] for i in indices]

    fields = None
    if args.field_dir:
        fields = []
        for k in range(len(sub_frames) - 1):
            p = Path(args.field_dir) / f"field{k:03d}.dfield"
            if not p.is_file():
                raise vio.FormatError(f"{p}: missing deformation field for pair {k}")
            fields.append(vio.load_deformation_field(p, cfg.max_displacement))

    seg_masks = None
    if args.seg_dir:
        seg_masks = []
        for i in indices[1:]:
            p = Path(args.seg_dir) / f"frame{i:03d}.png"
            if not p.is_file():
                raise vio.FormatError(f"{p}: missing segmentation mask for frame {i}")
            m = vio.load_mask(p)
            if m.shape != frames[0].shape:
                raise vio.FormatError(f"{p}: mask size {m.shape} differs from frames {frames[0].shape}")
            seg_masks.append(m)

    report = track_sequence(sub_frames, initial.with_frame(indices[0]), cfg,
                            fields=fields, frame_indices=indices[1:], seg_masks=seg_masks)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for ann in report.annotations:
        vio.save_annotation(ann, out / f"frame{ann.frame_index:03d}.ann")
    (out / "report.txt").write_text(report.to_text())
    print(f"tracked {len(report.annotations)} frames "
          f"({report.n_fallbacks} fallbacks) -> {out}")
    return 0


def _load_annotation_dir(directory) -> dict[int, object]:
    d = Path(directory)
    if not d.is_dir():
        raise vio.FormatError(f"{directory}: not a directory")
    anns = {}
    for p in sorted(d.glob("*.ann")):
        ann = vio.load_annotation(p)
        anns[ann.frame_index] = ann
    if not anns:
        raise vio.FormatError(f"{directory}: no .ann files found")
    return anns


def _cmd_eval(args) -> int:
    cfg = _merge_options(args, ["rho"])
    rho = cfg.get("rho", 3.0)
    pred = _load_annotation_dir(args.pred)
    gt = _load_annotation_dir(args.gt)
    missing = sorted(set(pred) - set(gt))
    if missing:
        raise vio.FormatError(f"no ground truth for predicted frames {missing[:5]}")
    seq_name = Path(args.pred).name
    rows = []
    triples = []
    for fi in sorted(pred):
        t = metrics(match_counts(pred[fi], gt[fi], rho))
        rows.append((seq_name, fi, t))
        triples.append(t)
    table = format_table(rows, aggregate([triples]))
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(table)
    else:
        sys.stdout.write(table)
    return 0


def _draw_annotation(draw: ImageDraw.ImageDraw, ann, color) -> None:
    for b in ann.branches:
        draw.line([(float(x), float(y)) for x, y in b], fill=color, width=1)


def _cmd_render_overlay(args) -> int:
    frames, _ = vio.load_sequence(args.seq)
    pred = _load_annotation_dir(args.ann)
    gt = _load_annotation_dir(args.gt) if args.gt else {}
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    count = 0
    for fi, ann in sorted(pred.items()):
        if fi >= len(frames):
            raise vio.FormatError(f"annotation frame_index {fi} exceeds sequence length {len(frames)}")
        u8 = np.clip(np.rint(frames[fi] * 255.0), 0, 255).astype(np.uint8)
        img = Image.fromarray(u8, mode="L").convert("RGB")
        draw = ImageDraw.Draw(img)
        if fi in gt:
            _draw_annotation(draw, gt[fi], (255, 0, 255))
        _draw_annotation(draw, ann, (0, 255, 0))
        img.save(out / f"overlay{fi:03d}.png")
        count += 1
    print(f"wrote {count} overlays to {out}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vesseltrack",
                                 description="track curvilinear structures across image sequences")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic sequence with ground truth")
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--frames", type=int, default=12)
    p.add_argument("--size", type=int, default=512)
    p.add_argument("--branches", type=int, default=3)
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--width", type=float, default=2.0)
    p.add_argument("--contrast", type=float, default=0.5)
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--amplitude", type=float, default=4.0)
    p.add_argument("--fpc", type=int, default=12, help="frames per motion cycle")
    p.add_argument("--gradient", type=float, default=0.0)
    p.set_defaults(fn=_cmd_synth)

    p = sub.add_parser("track", help="track an initial annotation through a sequence")
    p.add_argument("--seq", required=True, help="directory of frame images (manifest honored)")
    p.add_argument("--ann", required=True, help="annotation file for the first tracked frame")
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--sigma", type=float)
    p.add_argument("--n", type=int, help="candidate segments per endpoint")
    p.add_argument("--stride", type=int)
    p.add_argument("--no-fusion", action="store_true", help="disable branch fusion of emitted results")
    p.add_argument("--field-dir", help="directory of field###.dfield files, one per frame pair")
    p.add_argument("--seg-dir", help="directory of frame###.png segmentation masks (nonzero = vessel)")
    p.set_defaults(fn=_cmd_track)

    p = sub.add_parser("eval", help="compare predicted annotations against ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--rho", type=float)
    p.add_argument("--out")
    p.add_argument("--config")
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("render-overlay", help="draw tracked (and optionally true) centerlines on frames")
    p.add_argument("--seq", required=True)
    p.add_argument("--ann", required=True, help="directory of annotations to draw")
    p.add_argument("--gt", help="optional ground-truth annotation directory")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_render_overlay)
    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, vio.FormatError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
