"""
On-disk formats.

Masks are binary 16-bit PGM (``P5``, maxval 65535, big-endian samples) with
cell value ``round(score * 65535)``. A JSON sidecar next to the image
(same stem, ``.json``) carries the box the grid spans.

Regions (ground truth or predictions) are JSON Lines, one object per region:
``{"id": ..., "quad": [x1, y1, ..., x4, y4], "confidence": ..., "ignore": ...}``
with the last two keys optional.
"""
from __future__ import annotations

import json
import logging
import re
from collections import defaultdict
from pathlib import Path

import numpy as np

from .evaluation import GroundTruth, Prediction
from .geometry import Box, Quad
from .pyramid_label import SoftMask

MAXVAL = 65535

log = logging.getLogger(__name__)


class FormatError(ValueError):
    pass


def quantize(scores) -> np.ndarray:
    return np.rint(np.clip(np.asarray(scores, dtype=float), 0.0, 1.0) * MAXVAL).astype(np.uint16)


def dequantize(values) -> np.ndarray:
    return np.asarray(values, dtype=float) / MAXVAL


def quantized(mask: SoftMask) -> SoftMask:
    """The mask exactly as it will read back from disk."""
    return SoftMask(dequantize(quantize(mask.scores)), mask.box)


def write_pgm16(path, values: np.ndarray) -> None:
    values = np.asarray(values)
    if values.ndim != 2:
        raise FormatError("PGM data must be 2D")
    h, w = values.shape
    header = f"P5\n{w} {h}\n{MAXVAL}\n".encode("ascii")
    Path(path).write_bytes(header + values.astype(">u2").tobytes())


_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def read_pgm16(path) -> np.ndarray:
    data = Path(path).read_bytes()
    pos = 0
    fields = []
    for _ in range(4):
        m = _TOKEN.match(data, pos)
        if m is None:
            raise FormatError(f"{path}: truncated PGM header")
        fields.append(m.group(1))
        pos = m.end()
    if fields[0] != b"P5":
        raise FormatError(f"{path}: not a binary PGM (magic {fields[0]!r})")
    try:
        w, h, maxval = (int(f) for f in fields[1:])
    except ValueError as exc:
        raise FormatError(f"{path}: bad PGM header") from exc
    pos += 1  # single whitespace byte after maxval
    if maxval < 256:
        dtype, scale = np.uint8, maxval
    elif maxval <= MAXVAL:
        dtype, scale = np.dtype(">u2"), maxval
    else:
        raise FormatError(f"{path}: maxval {maxval} out of range")
    count = w * h
    if len(data) - pos < count * np.dtype(dtype).itemsize:
        raise FormatError(f"{path}: expected {count} samples")
    values = np.frombuffer(data, dtype=dtype, count=count, offset=pos).reshape(h, w).astype(np.uint16)
    if scale != MAXVAL:
        values = np.rint(values.astype(float) * MAXVAL / scale).astype(np.uint16)
    return values


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def save_mask(mask: SoftMask, path) -> Path:
    path = Path(path)
    write_pgm16(path, quantize(mask.scores))
    meta = {"width": mask.width, "height": mask.height, "box": list(mask.box), "maxval": MAXVAL}
    sidecar_path(path).write_text(json.dumps(meta) + "\n")
    return path


def load_mask(path) -> SoftMask:
    path = Path(path)
    values = read_pgm16(path)
    side = sidecar_path(path)
    if side.exists():
        try:
            meta = json.loads(side.read_text())
            box = Box(*meta["box"])
        except (ValueError, KeyError, TypeError) as exc:
            raise FormatError(f"{side}: bad sidecar") from exc
        if (meta.get("width"), meta.get("height")) != (values.shape[1], values.shape[0]):
            raise FormatError(f"{side}: dims disagree with {path}")
    else:
        box = Box(0.0, 0.0, float(values.shape[1]), float(values.shape[0]))
    return SoftMask(dequantize(values), box)


def region_line(image_id: str, quad: Quad, **extra) -> str:
    obj = {"id": image_id, "quad": quad.flat()}
    obj.update(extra)
    return json.dumps(obj)


def read_regions(path, require_convex: bool = False) -> dict[str, list[dict]]:
    """Group the JSON Lines file by ``id``; each entry keeps ``quad`` as a Quad.

    With ``require_convex`` non-convex quads are dropped with a warning, since
    the IoU used for matching is only defined for convex quads.
    """
    out: dict[str, list[dict]] = defaultdict(list)
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                obj["quad"] = Quad.from_flat(obj["quad"])
                key = str(obj["id"])
            except (ValueError, KeyError, TypeError) as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from exc
            if require_convex and not obj["quad"].is_convex():
                log.warning("%s:%d: dropping non-convex quad of %s", path, lineno, key)
                continue
            out[key].append(obj)
    return dict(out)


def as_predictions(regions: dict[str, list[dict]]) -> dict[str, list[Prediction]]:
    return {k: [Prediction(r["quad"], float(r.get("confidence", 1.0))) for r in v] for k, v in regions.items()}


def as_ground_truth(regions: dict[str, list[dict]]) -> dict[str, list[GroundTruth]]:
    return {k: [GroundTruth(r["quad"], bool(r.get("ignore", False))) for r in v] for k, v in regions.items()}
