"""
Seeded synthetic corpus of pyramid masks with noise and box-truncation models.

Each record draws its own ``numpy.random.Generator`` (PCG64) from
``SeedSequence(seed, spawn_key=(index,))`` so a corpus is identical however
records are distributed over workers.
"""
from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import PyramaskError
from .formats import region_line, save_mask
from .geometry import Box, Quad
from .pyramid_label import SoftMask, rasterize_hard_label, rasterize_label

log = logging.getLogger(__name__)

SIDES = ("left", "top", "right", "bottom")
RNG_NAME = "numpy.PCG64/SeedSequence"
MANIFEST = "manifest.json"


@dataclass(frozen=True)
class NoiseSpec:
    additive_uniform_amplitude: float = 0.0
    gaussian_sigma: float = 0.0
    salt_fraction: float = 0.0
    # crop fraction per side, measured against the quad's own extent
    truncation: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.additive_uniform_amplitude < 0 or self.gaussian_sigma < 0:
            raise ValueError("noise amplitudes must be >= 0")
        if not 0.0 <= self.salt_fraction < 1.0:
            raise ValueError("salt_fraction must be in [0, 1)")
        trunc = {str(k): float(v) for k, v in dict(self.truncation).items() if float(v) != 0.0}
        for side, frac in trunc.items():
            if side not in SIDES:
                raise ValueError(f"unknown truncation side {side!r}")
            if not 0.0 <= frac < 0.4:
                raise ValueError("truncation fractions must be in [0, 0.4)")
        object.__setattr__(self, "truncation", {s: trunc[s] for s in SIDES if s in trunc})

    @classmethod
    def from_dict(cls, d: dict) -> "NoiseSpec":
        return cls(**{k: v for k, v in d.items() if k != "seed"})


@dataclass(frozen=True)
class QuadSampler:
    """Jittered rotated rectangles, kept only when convex and star-shaped."""

    center_range: tuple = (50.0, 150.0)
    width_range: tuple = (20.0, 100.0)
    aspect_range: tuple = (0.2, 1.0)
    max_rotation_deg: float = 30.0
    jitter: float = 0.15

    def sample(self, rng: np.random.Generator) -> Quad:
        while True:
            c = rng.uniform(*self.center_range, size=2)
            w = rng.uniform(*self.width_range)
            h = w * rng.uniform(*self.aspect_range)
            t = np.deg2rad(rng.uniform(-self.max_rotation_deg, self.max_rotation_deg))
            pts = np.array([[-w, -h], [w, -h], [w, h], [-w, h]]) / 2.0
            pts = pts + rng.uniform(-self.jitter, self.jitter, size=(4, 2)) * min(w, h)
            rot = np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])
            try:
                q = Quad(pts @ rot.T + c)
            except PyramaskError:
                continue
            if q.is_convex():
                return q


def truncate_box(box: Box, extent: Box, truncation: dict) -> Box:
    """Pull each truncated side inside the quad extent so the box covers ``1 - f`` of it."""
    x0, y0, x1, y1 = box
    if "left" in truncation:
        x0 = extent.x1 - (1.0 - truncation["left"]) * extent.width
    if "top" in truncation:
        y0 = extent.y1 - (1.0 - truncation["top"]) * extent.height
    if "right" in truncation:
        x1 = extent.x0 + (1.0 - truncation["right"]) * extent.width
    if "bottom" in truncation:
        y1 = extent.y0 + (1.0 - truncation["bottom"]) * extent.height
    return Box(x0, y0, x1, y1)


def apply_noise(scores: np.ndarray, noise: NoiseSpec, rng: np.random.Generator) -> np.ndarray:
    """Gaussian, then uniform, then salt, then clamp to [0, 1].

    Draws are made even for zero amplitudes so the random stream does not
    depend on which noise terms are enabled.
    """
    shape = scores.shape
    g = rng.normal(0.0, 1.0, size=shape)
    u = rng.uniform(-1.0, 1.0, size=shape)
    salt_hit = rng.random(size=shape) < noise.salt_fraction
    salt_val = rng.random(size=shape)
    out = scores + noise.gaussian_sigma * g + noise.additive_uniform_amplitude * u
    out = np.where(salt_hit, salt_val, out)
    return np.clip(out, 0.0, 1.0)


@dataclass
class Sample:
    quad: Quad
    full_box: Box
    box: Box
    soft: SoftMask
    hard: SoftMask


def record_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def make_sample(index: int, seed: int, dims=(56, 56), noise: NoiseSpec = NoiseSpec(),
                margin: float = 0.15, sampler: QuadSampler = QuadSampler()) -> Sample:
    """One corpus record: ground-truth quad, soft pyramid mask and hard text mask.

    Both masks share the (possibly truncated) box and the same noise draw.
    """
    rng = record_rng(seed, index)
    q = sampler.sample(rng)
    extent = q.bounds()
    full = Box.around(q.vertices, margin)
    box = truncate_box(full, extent, noise.truncation)
    width, height = dims
    soft = rasterize_label(q, width, height, box)
    hard = rasterize_hard_label(q, width, height, box)
    noise_rng = np.random.Generator(np.random.PCG64(rng.integers(0, 2**63)))
    if noise.additive_uniform_amplitude or noise.gaussian_sigma or noise.salt_fraction:
        state = noise_rng.bit_generator.state
        soft = SoftMask(apply_noise(soft.scores, noise, noise_rng), box)
        noise_rng.bit_generator.state = state
        hard = SoftMask(apply_noise(hard.scores, noise, noise_rng), box)
    return Sample(q, full, box, soft, hard)


def record_id(index: int) -> str:
    return f"r{index:06d}"


def _write_record(args) -> dict:
    index, seed, dims, noise, margin, sampler, out_dir = args
    s = make_sample(index, seed, dims, noise, margin, sampler)
    rid = record_id(index)
    mask_rel = f"masks/{rid}.pgm"
    hard_rel = f"masks/{rid}_hard.pgm"
    save_mask(s.soft, Path(out_dir) / mask_rel)
    save_mask(s.hard, Path(out_dir) / hard_rel)
    return {
        "id": rid,
        "quad": s.quad.flat(),
        "mask": mask_rel,
        "hard_mask": hard_rel,
        "box": list(s.box),
        "full_box": list(s.full_box),
        "extent": list(s.quad.bounds()),
    }


def generate_corpus(n: int, out_dir, seed: int = 0, dims=(56, 56), noise: NoiseSpec = NoiseSpec(),
                    margin: float = 0.15, sampler: QuadSampler = QuadSampler(), workers: int = 1) -> dict:
    """Write ``n`` records plus ``manifest.json`` and ``gt.jsonl`` under ``out_dir``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    out = Path(out_dir)
    (out / "masks").mkdir(parents=True, exist_ok=True)
    jobs = [(i, seed, tuple(dims), noise, margin, sampler, str(out)) for i in range(n)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_write_record, jobs, chunksize=max(1, n // (4 * workers))))
    else:
        records = [_write_record(j) for j in jobs]
    manifest = {
        "format": "pyramask-corpus/1",
        "seed": int(seed),
        "rng": RNG_NAME,
        "count": n,
        "dims": list(dims),
        "margin": margin,
        "sampler": asdict(sampler),
        "noise": asdict(noise),
        "records": records,
    }
    (out / MANIFEST).write_text(json.dumps(manifest, indent=1) + "\n")
    with open(out / "gt.jsonl", "w") as fh:
        for r in records:
            fh.write(region_line(r["id"], Quad.from_flat(r["quad"])) + "\n")
    log.info("wrote %d records to %s", n, out)
    return manifest


def load_manifest(corpus_dir) -> dict:
    return json.loads((Path(corpus_dir) / MANIFEST).read_text())
