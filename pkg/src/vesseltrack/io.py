"""File formats: annotations (JSON), 8-bit grayscale frames, deformation
fields and sequence manifests."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

from .core import VesselAnnotation, as_frame, densify_polyline

__all__ = [
    "load_annotation",
    "save_annotation",
    "load_frame",
    "save_frame",
    "load_mask",
    "load_deformation_field",
    "save_deformation_field",
    "load_sequence",
    "write_manifest",
]


class FormatError(ValueError):
    """Raised for malformed input files."""


def save_annotation(ann: VesselAnnotation, path) -> None:
    """Write an annotation as a JSON object with ``frame_index`` and
    ``branches`` (lists of ``[x, y]`` pairs in traversal order)."""
    doc = {
        "frame_index": int(ann.frame_index),
        "branches": [[[float(x), float(y)] for x, y in b] for b in ann.branches],
    }
    Path(path).write_text(json.dumps(doc, separators=(",", ":")) + "\n")


def load_annotation(path) -> VesselAnnotation:
    """Read an annotation file; branches are densified to pixel-chain spacing."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: not valid JSON ({e})") from None
    if not isinstance(doc, dict) or "branches" not in doc:
        raise FormatError(f"{path}: expected an object with a 'branches' key")
    branches = doc["branches"]
    if not isinstance(branches, list) or not branches:
        raise FormatError(f"{path}: 'branches' must be a non-empty list")
    out = []
    for i, b in enumerate(branches):
        arr = np.asarray(b, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 2 or len(arr) < 2:
            raise FormatError(f"{path}: branch {i} must be a list of >= 2 [x, y] pairs")
        if not np.isfinite(arr).all():
            raise FormatError(f"{path}: branch {i} has non-finite coordinates")
        out.append(densify_polyline(arr))
    return VesselAnnotation(out, int(doc.get("frame_index", 0)))


def save_frame(frame: np.ndarray, path) -> None:
    """Write a [0, 1] float frame as an 8-bit grayscale image."""
    u8 = np.clip(np.rint(np.asarray(frame) * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(u8, mode="L").save(str(path))


def load_frame(path) -> np.ndarray:
    """Read an image file as a [0, 1] float frame (color inputs are averaged)."""
    try:
        img = Image.open(str(path))
    except OSError as e:
        raise FormatError(f"{path}: cannot read image ({e})") from None
    arr = np.asarray(img.convert("L"), dtype=np.float64) / 255.0
    return as_frame(arr)


def load_mask(path) -> np.ndarray:
    """Read an 8-bit grayscale image as a boolean mask (nonzero = vessel)."""
    try:
        img = Image.open(str(path))
    except OSError as e:
        raise FormatError(f"{path}: cannot read mask ({e})") from None
    return np.asarray(img.convert("L")) > 0


DFIELD_MAGIC = b"DFIELD"


def save_deformation_field(field, path) -> None:
    """Text header ``DFIELD <width> <height>`` then little-endian float32
    payload: all dx row-major, then all dy row-major."""
    h, w = field.dx.shape
    with open(path, "wb") as f:
        f.write(b"DFIELD %d %d\n" % (w, h))
        f.write(field.dx.astype("<f4").tobytes())
        f.write(field.dy.astype("<f4").tobytes())


def load_deformation_field(path, max_displacement: float = 32.0):
    from .register import DeformationField

    raw = Path(path).read_bytes()
    nl = raw.find(b"\n")
    if nl < 0:
        raise FormatError(f"{path}: missing DFIELD header line")
    head = raw[:nl].split()
    if len(head) != 3 or head[0] != DFIELD_MAGIC:
        raise FormatError(f"{path}: bad header {raw[:nl]!r}, expected 'DFIELD <width> <height>'")
    try:
        w, h = int(head[1]), int(head[2])
    except ValueError:
        raise FormatError(f"{path}: non-integer dimensions in header") from None
    body = raw[nl + 1:]
    expected = 2 * w * h * 4
    if len(body) != expected:
        raise FormatError(f"{path}: payload is {len(body)} bytes, expected {expected}")
    flat = np.frombuffer(body, dtype="<f4").astype(np.float64)
    dx = flat[: w * h].reshape(h, w)
    dy = flat[w * h:].reshape(h, w)
    if not (np.isfinite(dx).all() and np.isfinite(dy).all()):
        raise FormatError(f"{path}: non-finite displacements")
    dx = np.clip(dx, -max_displacement, max_displacement)
    dy = np.clip(dy, -max_displacement, max_displacement)
    return DeformationField(dx=dx, dy=dy)


FRAME_SUFFIXES = (".png", ".pgm", ".bmp", ".tif", ".tiff", ".jpg", ".jpeg")


def load_sequence(directory) -> tuple[list[np.ndarray], list[str]]:
    """Load all frames of a sequence directory.

    A ``manifest.txt`` (first whitespace token per non-comment line names a
    frame file) fixes the order when present; otherwise image files are
    taken in lexicographic order.  Returns frames and their file stems.
    """
    d = Path(directory)
    if not d.is_dir():
        raise FormatError(f"{directory}: not a directory")
    manifest = d / "manifest.txt"
    if manifest.is_file():
        names = []
        for line in manifest.read_text().splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            names.append(line.split()[0])
        paths = [d / n for n in names]
        missing = [str(p) for p in paths if not p.is_file()]
        if missing:
            raise FormatError(f"manifest names missing frame files: {missing[:3]}")
    else:
        paths = sorted(p for p in d.iterdir() if p.suffix.lower() in FRAME_SUFFIXES)
    if not paths:
        raise FormatError(f"{directory}: no frame images found")
    frames = [load_frame(p) for p in paths]
    first = frames[0].shape
    for p, f in zip(paths, frames):
        if f.shape != first:
            raise FormatError(f"{p}: frame size {f.shape} differs from first frame {first}")
    return frames, [p.stem for p in paths]


def write_manifest(directory, frame_names: list[str], params: dict) -> None:
    lines = [f"# params: {json.dumps(params, sort_keys=True)}"]
    lines.extend(frame_names)
    (Path(directory) / "manifest.txt").write_text("\n".join(lines) + "\n")
