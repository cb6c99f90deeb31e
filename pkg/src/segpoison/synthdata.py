"""Procedural segmentation scenes: colored shapes on a flat background.

Each class owns one widely separated base color, so a pixel's class is
recoverable from its color alone and even a small linear classifier reaches
near-perfect benign accuracy.  That keeps model capacity out of the picture
when measuring what poisoning does.  Scenes are a pure function of
(seed, index): regenerating any index reproduces it bit-exactly, and train /
test splits simply use disjoint index ranges.

Near-black colors are kept out of the palette so the default black trigger
band never collides with a legitimate class color.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import io
from .core import ConfigError, Dataset, Image, LabelMask, Sample, derive_rng

#: Background plus the seven brightest well-separated RGB points.
_BASE_COLORS = (
    (128, 128, 128),  # 0: background gray
    (255, 0, 0),
    (0, 255, 0),
    (0, 0, 255),
    (255, 255, 0),
    (255, 0, 255),
    (0, 255, 255),
    (255, 255, 255),
)

#: Keep this much RGB distance between any class color and pure black.
_BLACK_CLEARANCE = 96.0


def class_palette(num_classes: int) -> np.ndarray:
    """Deterministic (K, 3) uint8 palette of well-separated class colors.

    The first eight entries are fixed; beyond that, colors are picked by
    greedy farthest-point selection over a coarse RGB grid, skipping
    anything too close to black.
    """
    if not 1 <= num_classes <= 255:
        raise ConfigError(f"palette supports 1..255 classes, got {num_classes}")
    chosen = [np.array(c, dtype=np.float64) for c in _BASE_COLORS[:num_classes]]
    if num_classes > len(_BASE_COLORS):
        levels = np.array([0, 51, 102, 153, 204, 255], dtype=np.float64)
        grid = np.stack(np.meshgrid(levels, levels, levels, indexing="ij"), -1)
        candidates = grid.reshape(-1, 3)
        candidates = candidates[
            np.linalg.norm(candidates, axis=1) >= _BLACK_CLEARANCE
        ]
        while len(chosen) < num_classes:
            dists = np.min(
                np.linalg.norm(
                    candidates[:, None, :] - np.asarray(chosen)[None, :, :], axis=2
                ),
                axis=1,
            )
            chosen.append(candidates[int(np.argmax(dists))])
    return np.asarray(chosen, dtype=np.uint8)


@dataclass(frozen=True)
class SceneSpec:
    """Recipe for one family of synthetic scenes.

    ``shapes_per_image`` is an inclusive (min, max) range; ``noise_std`` is
    the per-pixel Gaussian intensity perturbation applied on top of the base
    colors (clamped to 0..255).
    """

    num_classes: int = 8
    width: int = 64
    height: int = 64
    shapes_per_image: tuple[int, int] = (2, 5)
    noise_std: float = 8.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.num_classes < 3:
            raise ConfigError(
                "scenes need at least background, source and target classes "
                f"(num_classes >= 3), got {self.num_classes}"
            )
        if self.width < 16 or self.height < 16:
            raise ConfigError("scene dimensions must be at least 16x16")
        lo, hi = self.shapes_per_image
        if lo < 0 or hi < lo:
            raise ConfigError(
                f"shapes_per_image must be a non-negative range, got {self.shapes_per_image}"
            )
        if self.noise_std < 0:
            raise ConfigError("noise_std must be non-negative")

    def to_doc(self) -> dict:
        return {
            "format": "segpoison-scene-spec/1",
            "num_classes": self.num_classes,
            "width": self.width,
            "height": self.height,
            "shapes_per_image": list(self.shapes_per_image),
            "noise_std": self.noise_std,
            "seed": self.seed,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "SceneSpec":
        return cls(
            num_classes=int(doc["num_classes"]),
            width=int(doc["width"]),
            height=int(doc["height"]),
            shapes_per_image=tuple(int(v) for v in doc["shapes_per_image"]),
            noise_std=float(doc["noise_std"]),
            seed=int(doc["seed"]),
        )


def generate_scene(spec: SceneSpec, index: int) -> tuple[Image, LabelMask]:
    """Render scene ``index``: shapes painted over background class 0.

    Axis-aligned rectangles and discs are painted in sample order, later
    shapes overwriting earlier ones; the mask labels exactly the painted
    regions.  Deterministic in (spec.seed, index).
    """
    rng = derive_rng(spec.seed, index)
    h, w, k = spec.height, spec.width, spec.num_classes
    mask = np.zeros((h, w), dtype=np.uint8)
    lo, hi = spec.shapes_per_image
    n_shapes = int(rng.integers(lo, hi + 1))
    for _ in range(n_shapes):
        cls = int(rng.integers(1, k))
        if int(rng.integers(0, 2)) == 0:
            rect_h = int(rng.integers(h // 8, h // 3 + 1))
            rect_w = int(rng.integers(w // 8, w // 3 + 1))
            top = int(rng.integers(0, h - rect_h + 1))
            left = int(rng.integers(0, w - rect_w + 1))
            mask[top : top + rect_h, left : left + rect_w] = cls
        else:
            radius = int(rng.integers(min(h, w) // 10, min(h, w) // 4 + 1))
            cy = int(rng.integers(0, h))
            cx = int(rng.integers(0, w))
            yy, xx = np.ogrid[:h, :w]
            mask[(yy - cy) ** 2 + (xx - cx) ** 2 <= radius * radius] = cls
    colors = class_palette(k).astype(np.float64)
    pixels = colors[mask] + rng.normal(0.0, spec.noise_std, size=(h, w, 3))
    pixels = np.clip(np.floor(pixels + 0.5), 0, 255).astype(np.uint8)
    return Image(pixels), LabelMask(mask)


def generate_dataset(
    spec: SceneSpec, n: int, split: str, index_offset: int = 0
) -> Dataset:
    """Generate ``n`` scenes at indices offset..offset+n-1 as one dataset.

    Give train and test splits non-overlapping offset ranges and they will
    never share a scene.
    """
    if n < 1:
        raise ConfigError(f"dataset needs at least one sample, got n={n}")
    samples = []
    for i in range(index_offset, index_offset + n):
        image, mask = generate_scene(spec, i)
        samples.append(Sample(f"{i:05d}", image, mask))
    return Dataset(num_classes=spec.num_classes, samples=tuple(samples), split=split)


def write_scene_spec(spec: SceneSpec, out_dir: Path | str) -> None:
    """Store ``scene_spec.json`` beside a generated dataset."""
    io.write_json(Path(out_dir) / "scene_spec.json", spec.to_doc())


def load_scene_spec(path: Path | str) -> SceneSpec:
    return SceneSpec.from_doc(io.read_json(path))
