"""On-disk formats: dataset directories, mask directories, JSON documents.

A dataset directory holds ``manifest.json`` (num_classes, split, ordered
sample ids), ``images/<id>.png`` (8-bit RGB) and ``masks/<id>.png`` (8-bit
single-channel, pixel value = class id, 255 = ignore).  Encoding is lossless
and byte-deterministic: writing the same dataset twice produces identical
trees, which the reproducibility checks rely on.

Prediction directories reuse the same manifest plus ``masks/`` only.
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image as PILImage

from .core import (
    ConfigError,
    Dataset,
    Image,
    LabelMask,
    Sample,
)

DATASET_FORMAT = "segpoison-dataset/1"
MASKS_FORMAT = "segpoison-masks/1"


def write_json(path: Path | str, doc: dict) -> None:
    """Write a JSON document with deterministic bytes."""
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    Path(path).write_text(text, encoding="utf-8")


def read_json(path: Path | str) -> dict:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    return doc


def save_image_png(image: Image, path: Path | str) -> None:
    PILImage.fromarray(np.asarray(image.data), mode="RGB").save(path, format="PNG")


def load_image_png(path: Path | str) -> Image:
    with PILImage.open(path) as img:
        if img.mode != "RGB":
            raise ConfigError(f"{path}: expected an 8-bit RGB image, got mode {img.mode}")
        return Image(np.asarray(img))


def save_mask_png(mask: LabelMask, path: Path | str) -> None:
    PILImage.fromarray(np.asarray(mask.data), mode="L").save(path, format="PNG")


def load_mask_png(path: Path | str, ignore_value: int | None = 255) -> LabelMask:
    with PILImage.open(path) as img:
        if img.mode != "L":
            raise ConfigError(
                f"{path}: expected an 8-bit single-channel mask, got mode {img.mode}"
            )
        return LabelMask(np.asarray(img), ignore_value=ignore_value)


def save_dataset(dataset: Dataset, out_dir: Path | str) -> None:
    """Write ``dataset`` as a dataset directory (manifest + images + masks)."""
    out = Path(out_dir)
    (out / "images").mkdir(parents=True, exist_ok=True)
    (out / "masks").mkdir(parents=True, exist_ok=True)
    for sample in dataset:
        save_image_png(sample.image, out / "images" / f"{sample.sample_id}.png")
        save_mask_png(sample.mask, out / "masks" / f"{sample.sample_id}.png")
    write_json(
        out / "manifest.json",
        {
            "format": DATASET_FORMAT,
            "num_classes": dataset.num_classes,
            "split": dataset.split,
            "samples": list(dataset.sample_ids),
        },
    )


def load_dataset(path: Path | str) -> Dataset:
    """Load a dataset directory written by :func:`save_dataset`."""
    root = Path(path)
    manifest = read_json(root / "manifest.json")
    if manifest.get("format") != DATASET_FORMAT:
        raise ConfigError(f"{root}: not a dataset directory (format field mismatch)")
    samples = []
    for sample_id in manifest["samples"]:
        image = load_image_png(root / "images" / f"{sample_id}.png")
        mask = load_mask_png(root / "masks" / f"{sample_id}.png")
        samples.append(Sample(sample_id, image, mask))
    return Dataset(
        num_classes=int(manifest["num_classes"]),
        samples=tuple(samples),
        split=str(manifest["split"]),
    )


def save_masks(
    masks: Sequence[tuple[str, LabelMask]],
    num_classes: int,
    split: str,
    out_dir: Path | str,
) -> None:
    """Write a mask-only directory (predictions, targets)."""
    out = Path(out_dir)
    (out / "masks").mkdir(parents=True, exist_ok=True)
    for sample_id, mask in masks:
        save_mask_png(mask, out / "masks" / f"{sample_id}.png")
    write_json(
        out / "manifest.json",
        {
            "format": MASKS_FORMAT,
            "num_classes": num_classes,
            "split": split,
            "samples": [sample_id for sample_id, _ in masks],
        },
    )


def load_masks(
    path: Path | str, ignore_value: int | None = None
) -> tuple[int, list[tuple[str, LabelMask]]]:
    """Load a mask-only directory; returns (num_classes, ordered (id, mask))."""
    root = Path(path)
    manifest = read_json(root / "manifest.json")
    if manifest.get("format") not in (MASKS_FORMAT, DATASET_FORMAT):
        raise ConfigError(f"{root}: not a mask directory (format field mismatch)")
    masks = [
        (sample_id, load_mask_png(root / "masks" / f"{sample_id}.png", ignore_value))
        for sample_id in manifest["samples"]
    ]
    return int(manifest["num_classes"]), masks


def file_digest(path: Path | str) -> str:
    """sha256 hex digest of one file's bytes."""
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def tree_digest(path: Path | str) -> str:
    """sha256 digest over a directory tree: relative paths plus file bytes.

    Two trees digest equal iff they contain the same files with the same
    contents, independent of creation order and timestamps.
    """
    root = Path(path)
    h = hashlib.sha256()
    for file in sorted(p for p in root.rglob("*") if p.is_file()):
        h.update(file.relative_to(root).as_posix().encode())
        h.update(b"\x00")
        h.update(bytes.fromhex(file_digest(file)))
    return h.hexdigest()
