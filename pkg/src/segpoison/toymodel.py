"""A from-scratch per-pixel classifier: multinomial logistic regression on
local RGB patches.

The model scores each pixel from the (2r+1)^2 patch centered on it
(replicate-padded at borders, scaled to [0, 1], plus a bias term) and is
trained by plain mini-batch SGD on per-pixel cross-entropy.  It is
deliberately shallow: strong enough to segment the synthetic palette scenes
almost perfectly and to pick up trigger-conditioned label flips, weak enough
that training a model takes seconds on a laptop.

Training is fully deterministic in (dataset, config, patch radius): pixel
subsampling derives its generator from (seed, epoch, image index), and
updates run in a fixed sequential order.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import io
from .core import (
    ConfigError,
    Dataset,
    Image,
    LabelMask,
    TrainingError,
    derive_rng,
)

MODEL_FORMAT = "segpoison-patch-model/1"


def feature_dim(patch_radius: int) -> int:
    """F = 3 * (2r+1)^2 + 1: flattened RGB patch plus bias."""
    side = 2 * patch_radius + 1
    return 3 * side * side + 1


@dataclass(frozen=True)
class TrainConfig:
    """Knobs of the SGD loop.

    ``pixel_sample_rate`` is the fraction of each image's scored pixels used
    per epoch (fresh draw every epoch); ``batch_size`` counts pixels per
    update step.
    """

    epochs: int = 12
    learning_rate: float = 0.5
    batch_size: int = 4096
    pixel_sample_rate: float = 0.25
    seed: int = 0

    def __post_init__(self) -> None:
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if not 0.0 < self.pixel_sample_rate <= 1.0:
            raise ConfigError(
                f"pixel_sample_rate must lie in (0, 1], got {self.pixel_sample_rate}"
            )


@dataclass(frozen=True, eq=False)
class PatchModel:
    """Linear per-pixel classifier: weights is (K, F) over patch features."""

    num_classes: int
    patch_radius: int
    weights: np.ndarray
    training_meta: Mapping[str, object]

    def __post_init__(self) -> None:
        weights = np.asarray(self.weights, dtype=np.float64)
        expected = (self.num_classes, feature_dim(self.patch_radius))
        if weights.shape != expected:
            raise ConfigError(
                f"weights must have shape {expected}, got {weights.shape}"
            )
        if not np.all(np.isfinite(weights)):
            raise ConfigError("weights must be finite")
        weights = np.ascontiguousarray(weights)
        weights.flags.writeable = False
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "training_meta", dict(self.training_meta))


def extract_features(image: Image, row: int, col: int, patch_radius: int) -> np.ndarray:
    """Feature vector of one pixel: its padded patch in [0, 1] plus bias 1."""
    r = patch_radius
    if r < 0:
        raise ConfigError(f"patch_radius must be >= 0, got {r}")
    padded = np.pad(image.data, ((r, r), (r, r), (0, 0)), mode="edge")
    patch = padded[row : row + 2 * r + 1, col : col + 2 * r + 1, :]
    return np.concatenate([patch.reshape(-1) / 255.0, [1.0]])


def image_features(image: Image, patch_radius: int) -> np.ndarray:
    """(H*W, F) feature matrix of every pixel, row-major, matching
    :func:`extract_features` exactly."""
    r = patch_radius
    if r < 0:
        raise ConfigError(f"patch_radius must be >= 0, got {r}")
    padded = np.pad(image.data, ((r, r), (r, r), (0, 0)), mode="edge")
    side = 2 * r + 1
    windows = sliding_window_view(padded, (side, side, 3))
    n = image.height * image.width
    flat = windows.reshape(n, side * side * 3).astype(np.float64) / 255.0
    return np.concatenate([flat, np.ones((n, 1))], axis=1)


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def loss_and_gradient(
    weights: np.ndarray, features: np.ndarray, labels: np.ndarray
) -> tuple[float, np.ndarray]:
    """Mean cross-entropy of softmax scores and its exact gradient in the weights.

    ``features`` is (B, F), ``labels`` (B,) with values < K.
    """
    batch = features.shape[0]
    probs = _softmax(features @ weights.T)
    eps = np.finfo(np.float64).tiny
    loss = float(-np.mean(np.log(probs[np.arange(batch), labels] + eps)))
    probs[np.arange(batch), labels] -= 1.0
    grad = probs.T @ features / batch
    return loss, grad


def train(
    dataset: Dataset, config: TrainConfig, patch_radius: int = 2
) -> tuple[PatchModel, list[float]]:
    """Fit a patch model by mini-batch SGD; returns (model, per-step losses).

    Each epoch walks the dataset in order; per image, a seed-derived
    subsample of scored pixels is featurized and consumed in batches.
    Weights start at zero, so epochs=0 returns the uniform-prediction model.
    """
    k = dataset.num_classes
    weights = np.zeros((k, feature_dim(patch_radius)), dtype=np.float64)
    losses: list[float] = []
    scored_total = sum(int(s.mask.scored().sum()) for s in dataset)
    if scored_total == 0:
        raise TrainingError("dataset has no scored (non-ignore) pixels")
    for epoch in range(config.epochs):
        for img_index, sample in enumerate(dataset):
            scored_flat = np.flatnonzero(sample.mask.scored().reshape(-1))
            if scored_flat.size == 0:
                continue
            rng = derive_rng(config.seed, epoch, img_index)
            take = max(1, int(round(config.pixel_sample_rate * scored_flat.size)))
            picked = scored_flat[
                rng.choice(scored_flat.size, size=take, replace=False)
            ]
            feats = image_features(sample.image, patch_radius)[picked]
            labels = sample.mask.data.reshape(-1)[picked].astype(np.int64)
            for start in range(0, take, config.batch_size):
                stop = start + config.batch_size
                loss, grad = loss_and_gradient(
                    weights, feats[start:stop], labels[start:stop]
                )
                weights -= config.learning_rate * grad
                losses.append(loss)
    model = PatchModel(
        num_classes=k,
        patch_radius=patch_radius,
        weights=weights,
        training_meta={
            "seed": config.seed,
            "epochs": config.epochs,
            "learning_rate": config.learning_rate,
            "batch_size": config.batch_size,
            "pixel_sample_rate": config.pixel_sample_rate,
            "train_split": dataset.split,
            "train_samples": len(dataset),
        },
    )
    return model, losses


def predict(model: PatchModel, image: Image) -> LabelMask:
    """Per-pixel argmax of the softmax scores; ties go to the lowest class id."""
    logits = image_features(image, model.patch_radius) @ model.weights.T
    labels = logits.argmax(axis=1).astype(np.uint8)
    return LabelMask(
        labels.reshape(image.height, image.width), ignore_value=None
    )


def save_model(model: PatchModel, path: Path | str) -> None:
    """Versioned text dump; identical models produce identical bytes."""
    io.write_json(
        path,
        {
            "format": MODEL_FORMAT,
            "num_classes": model.num_classes,
            "patch_radius": model.patch_radius,
            "feature_dim": feature_dim(model.patch_radius),
            "training_meta": dict(model.training_meta),
            "weights": [[float(v) for v in row] for row in model.weights],
        },
    )


def load_model(path: Path | str) -> PatchModel:
    doc = io.read_json(path)
    if doc.get("format") != MODEL_FORMAT:
        raise ConfigError(f"{path}: not a patch-model file (format field mismatch)")
    return PatchModel(
        num_classes=int(doc["num_classes"]),
        patch_radius=int(doc["patch_radius"]),
        weights=np.asarray(doc["weights"], dtype=np.float64),
        training_meta=doc.get("training_meta", {}),
    )
