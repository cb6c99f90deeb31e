import hashlib
from pathlib import Path

import numpy as np
import pytest

from segpoison import Dataset, Image, LabelMask, Sample


def artifact_digest(path):
    """Tree digest skipping run manifests (they record caller-chosen paths)."""
    root = Path(path)
    h = hashlib.sha256()
    for file in sorted(p for p in root.rglob("*") if p.is_file()):
        if file.name == "run_manifest.json":
            continue
        h.update(file.relative_to(root).as_posix().encode())
        h.update(b"\x00")
        h.update(file.read_bytes())
    return h.hexdigest()


def random_image(rng, h=8, w=8):
    return Image(rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8))


def random_mask(rng, h=8, w=8, k=5, ignore_fraction=0.0):
    data = rng.integers(0, k, size=(h, w)).astype(np.uint8)
    if ignore_fraction > 0:
        data[rng.random(size=(h, w)) < ignore_fraction] = 255
    return LabelMask(data)


def make_dataset(rng, n=4, h=8, w=8, k=5, split="train", ignore_fraction=0.0):
    samples = tuple(
        Sample(f"{i:05d}", random_image(rng, h, w), random_mask(rng, h, w, k, ignore_fraction))
        for i in range(n)
    )
    return Dataset(num_classes=k, samples=samples, split=split)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
