"""Shared domain types for segmentation poisoning experiments.

Images are dense 8-bit RGB grids, label masks are per-pixel class-id grids
with an optional ignore sentinel, and a dataset is an ordered list of
(image, mask) samples sharing one class count.  Everything here is immutable
after construction (backing arrays are marked read-only), so values can be
shared freely across threads.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping

import numpy as np

#: Reserved mask value excluded from all transforms and metrics.
IGNORE_VALUE = 255

#: Masks store class ids as 8-bit values, so at most 255 classes plus the sentinel.
MAX_CLASSES = 255


class SegPoisonError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(SegPoisonError):
    """A configuration value is inconsistent or unusable."""


class OutOfRangeError(SegPoisonError):
    """A class id falls outside the valid range."""


class PlacementError(SegPoisonError):
    """A trigger does not fit inside the image it is placed on."""


class SelectionError(SegPoisonError):
    """Poison-sample selection cannot be satisfied."""


class AlignmentError(SegPoisonError):
    """Paired inputs (masks, prediction lists) do not line up."""


class TrainingError(SegPoisonError):
    """Training cannot proceed on the given data."""


def derive_rng(*keys: int) -> np.random.Generator:
    """Deterministic generator keyed by a tuple of integers.

    Negative keys are mapped to their unsigned 64-bit representation so any
    64-bit seed is accepted.
    """
    return np.random.default_rng([int(k) & 0xFFFFFFFFFFFFFFFF for k in keys])


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


def _as_u8(arr: np.ndarray, what: str) -> np.ndarray:
    if arr.dtype == np.uint8:
        return arr
    if not np.issubdtype(arr.dtype, np.integer):
        raise ConfigError(f"{what} must have an integer dtype, got {arr.dtype}")
    if arr.size and (arr.min() < 0 or arr.max() > 255):
        raise ConfigError(f"{what} values must lie in 0..255")
    return arr.astype(np.uint8)


@dataclass(frozen=True, eq=False)
class Image:
    """An 8-bit RGB image with shape (height, width, 3), row-major."""

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.data)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ConfigError(f"image must have shape (h, w, 3), got {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ConfigError("image must have at least one pixel")
        object.__setattr__(self, "data", _readonly(_as_u8(arr, "image")))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def size(self) -> tuple[int, int]:
        """(height, width) in pixels."""
        return self.data.shape[0], self.data.shape[1]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Image):
            return NotImplemented
        return np.array_equal(self.data, other.data)


@dataclass(frozen=True, eq=False)
class LabelMask:
    """A per-pixel class-id grid with shape (height, width).

    ``ignore_value`` pixels (255 by default) carry no class information and
    are skipped by every transform and metric.  Set it to ``None`` for masks
    guaranteed to score every pixel, e.g. model predictions.
    """

    data: np.ndarray
    ignore_value: int | None = IGNORE_VALUE

    def __post_init__(self) -> None:
        arr = np.asarray(self.data)
        if arr.ndim != 2:
            raise ConfigError(f"mask must have shape (h, w), got {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ConfigError("mask must have at least one pixel")
        if self.ignore_value is not None and not 0 <= self.ignore_value <= 255:
            raise ConfigError(f"ignore_value must be in 0..255, got {self.ignore_value}")
        object.__setattr__(self, "data", _readonly(_as_u8(arr, "mask")))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def size(self) -> tuple[int, int]:
        return self.data.shape[0], self.data.shape[1]

    def scored(self) -> np.ndarray:
        """Boolean grid of pixels that carry class information."""
        if self.ignore_value is None:
            return np.ones(self.data.shape, dtype=bool)
        return self.data != self.ignore_value

    def present_classes(self) -> np.ndarray:
        """Sorted class ids present in at least one non-ignore pixel."""
        return np.unique(self.data[self.scored()])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LabelMask):
            return NotImplemented
        return self.ignore_value == other.ignore_value and np.array_equal(
            self.data, other.data
        )


@dataclass(frozen=True)
class Sample:
    """One (image, mask) pair with a stable id."""

    sample_id: str
    image: Image
    mask: LabelMask


@dataclass(frozen=True, eq=False)
class Dataset:
    """An ordered collection of samples sharing one class count.

    ``num_classes`` is the K of the label space: valid class ids are
    0..K-1 plus the ignore sentinel.  Construction is permissive about
    per-sample consistency; run :func:`validate_dataset` to get a full
    report of violations.
    """

    num_classes: int
    samples: tuple[Sample, ...]
    split: str = "train"

    def __post_init__(self) -> None:
        object.__setattr__(self, "samples", tuple(self.samples))
        if not 1 <= self.num_classes <= MAX_CLASSES:
            raise ConfigError(
                f"num_classes must be in 1..{MAX_CLASSES}, got {self.num_classes}"
            )

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self) -> Iterator[Sample]:
        return iter(self.samples)

    @property
    def sample_ids(self) -> tuple[str, ...]:
        return tuple(s.sample_id for s in self.samples)

    def by_id(self) -> dict[str, Sample]:
        return {s.sample_id: s for s in self.samples}

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.num_classes == other.num_classes
            and self.split == other.split
            and len(self.samples) == len(other.samples)
            and all(
                a.sample_id == b.sample_id and a.image == b.image and a.mask == b.mask
                for a, b in zip(self.samples, other.samples)
            )
        )


@dataclass(frozen=True)
class Violation:
    """One dataset-invariant violation, attributed to a sample when possible."""

    sample_id: str | None
    message: str


def validate_dataset(dataset: Dataset) -> list[Violation]:
    """Report every invariant violation in ``dataset``.

    Total: never raises on malformed content, returns an empty list iff the
    dataset is valid.
    """
    violations: list[Violation] = []
    seen: set[str] = set()
    for sample in dataset.samples:
        if sample.sample_id in seen:
            violations.append(
                Violation(sample.sample_id, "duplicate sample id")
            )
        seen.add(sample.sample_id)
        if sample.image.size != sample.mask.size:
            violations.append(
                Violation(
                    sample.sample_id,
                    f"image size {sample.image.size} does not match "
                    f"mask size {sample.mask.size}",
                )
            )
        present = sample.mask.present_classes()
        bad = present[present >= dataset.num_classes]
        for value in bad:
            violations.append(
                Violation(
                    sample.sample_id,
                    f"mask value {int(value)} out of range for "
                    f"num_classes={dataset.num_classes}",
                )
            )
        ignore = sample.mask.ignore_value
        if ignore is not None and ignore < dataset.num_classes:
            violations.append(
                Violation(
                    sample.sample_id,
                    f"ignore_value {ignore} collides with the class range",
                )
            )
    return violations


@dataclass(frozen=True, eq=False)
class AttackMatrix:
    """Row map of a 0/1 class-remapping matrix.

    ``row_targets[i]`` names the class that pixels of ground-truth class i
    are relabeled to; storing one target per row enforces row-stochasticity
    by construction.
    """

    num_classes: int
    row_targets: np.ndarray

    def __post_init__(self) -> None:
        rows = np.asarray(self.row_targets)
        if rows.shape != (self.num_classes,):
            raise ConfigError(
                f"row_targets must have shape ({self.num_classes},), got {rows.shape}"
            )
        if not np.issubdtype(rows.dtype, np.integer):
            raise ConfigError("row_targets must be integers")
        if rows.size and (rows.min() < 0 or rows.max() >= self.num_classes):
            raise OutOfRangeError(
                f"row_targets must lie in 0..{self.num_classes - 1}"
            )
        object.__setattr__(self, "row_targets", _readonly(rows.astype(np.intp)))

    def as_dense(self) -> np.ndarray:
        """The explicit K x K 0/1 matrix (each row sums to one)."""
        dense = np.zeros((self.num_classes, self.num_classes), dtype=np.uint8)
        dense[np.arange(self.num_classes), self.row_targets] = 1
        return dense

    @property
    def is_identity(self) -> bool:
        return bool(np.array_equal(self.row_targets, np.arange(self.num_classes)))

    @property
    def source_classes(self) -> tuple[int, ...]:
        """Classes whose pixels actually change under this map."""
        rows = self.row_targets
        return tuple(int(i) for i in np.flatnonzero(rows != np.arange(len(rows))))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AttackMatrix):
            return NotImplemented
        return self.num_classes == other.num_classes and np.array_equal(
            self.row_targets, other.row_targets
        )


NON_SEMANTIC = "non_semantic"
SEMANTIC = "semantic"


@dataclass(frozen=True, eq=False)
class TriggerSpec:
    """How a trigger activates: a blended pixel pattern, or an object class.

    Non-semantic triggers carry a pattern fragment plus per-pixel blend
    weights in [0, 1] over the same support, anchored at ``placement``
    (row, col) in target-image coordinates.  Semantic triggers name a class
    whose natural presence activates the backdoor; they carry an empty
    pattern and leave images untouched.
    """

    kind: str
    pattern: np.ndarray
    blend_mask: np.ndarray
    placement: tuple[int, int] = (0, 0)
    trigger_class: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in (NON_SEMANTIC, SEMANTIC):
            raise ConfigError(f"unknown trigger kind {self.kind!r}")
        pattern = np.asarray(self.pattern)
        blend = np.asarray(self.blend_mask, dtype=np.float64)
        if pattern.ndim != 3 or pattern.shape[2] != 3:
            raise ConfigError(f"pattern must have shape (h, w, 3), got {pattern.shape}")
        if blend.shape != pattern.shape[:2]:
            raise ConfigError(
                f"blend_mask shape {blend.shape} must match pattern "
                f"support {pattern.shape[:2]}"
            )
        if blend.size and (blend.min() < 0.0 or blend.max() > 1.0):
            raise ConfigError("blend_mask values must lie in [0, 1]")
        if self.kind == SEMANTIC:
            if self.trigger_class is None or self.trigger_class < 0:
                raise ConfigError("semantic trigger requires a non-negative class id")
            if pattern.size:
                raise ConfigError("semantic trigger must carry an empty pattern")
        else:
            if self.trigger_class is not None:
                raise ConfigError("non-semantic trigger takes no trigger class")
            if not pattern.size:
                raise ConfigError("non-semantic trigger requires a non-empty pattern")
        object.__setattr__(self, "pattern", _readonly(_as_u8(pattern, "pattern")))
        object.__setattr__(self, "blend_mask", _readonly(blend))
        object.__setattr__(
            self, "placement", (int(self.placement[0]), int(self.placement[1]))
        )

    @classmethod
    def semantic(cls, trigger_class: int) -> "TriggerSpec":
        """Trigger activated by the presence of ``trigger_class`` objects."""
        return cls(
            kind=SEMANTIC,
            pattern=np.zeros((0, 0, 3), dtype=np.uint8),
            blend_mask=np.zeros((0, 0), dtype=np.float64),
            trigger_class=trigger_class,
        )

    @property
    def support(self) -> tuple[int, int]:
        """(height, width) of the pattern footprint."""
        return self.pattern.shape[0], self.pattern.shape[1]


MODE_FINE_GRAINED = "fine_grained"
MODE_BADNETS = "badnets"

SELECT_RANDOM = "random"
SELECT_REQUIRES_CLASSES = "requires_classes"


@dataclass(frozen=True)
class PoisonConfig:
    """A complete attack recipe.

    ``fine_grained`` mode relabels pixels per object through an attack
    matrix; ``badnets`` mode replaces the whole annotation with one constant
    target mask.  ``poisoning_rate`` is the fraction of training samples to
    modify; under ``requires_classes`` selection the full eligible set is
    poisoned and the rate acts as a lower bound (the effective rate is an
    output, not a knob).
    """

    mode: str
    trigger: TriggerSpec
    poisoning_rate: float
    seed: int = 0
    selection: str = SELECT_RANDOM
    required_classes: tuple[int, ...] = ()
    attack_matrix: AttackMatrix | None = None
    badnets_target: LabelMask | None = None

    def __post_init__(self) -> None:
        if self.mode not in (MODE_FINE_GRAINED, MODE_BADNETS):
            raise ConfigError(f"unknown poison mode {self.mode!r}")
        if not 0.0 <= self.poisoning_rate <= 1.0:
            raise ConfigError(
                f"poisoning_rate must lie in [0, 1], got {self.poisoning_rate}"
            )
        if self.selection not in (SELECT_RANDOM, SELECT_REQUIRES_CLASSES):
            raise ConfigError(f"unknown selection rule {self.selection!r}")
        if self.selection == SELECT_REQUIRES_CLASSES and not self.required_classes:
            raise ConfigError("requires_classes selection needs at least one class id")
        if self.mode == MODE_FINE_GRAINED:
            if self.attack_matrix is None:
                raise ConfigError("fine_grained mode requires an attack matrix")
            if self.badnets_target is not None:
                raise ConfigError("fine_grained mode takes no constant target mask")
        else:
            if self.badnets_target is None:
                raise ConfigError("badnets mode requires a constant target mask")
            if self.attack_matrix is not None:
                raise ConfigError("badnets mode takes no attack matrix")
        object.__setattr__(
            self, "required_classes", tuple(int(c) for c in self.required_classes)
        )


@dataclass(frozen=True)
class MetricsReport:
    """The five headline metrics plus the per-class IoU breakdown.

    Percentages are in [0, 100]; a metric whose denominator is empty is
    reported as ``None`` (absent) rather than 0, so "no qualifying pixels"
    stays distinguishable from "always wrong".  ``per_class_iou`` is the
    benign per-class breakdown with ``None`` for classes absent from both
    prediction and ground truth.  ``pixel_counts`` records the denominators
    behind every reported value.
    """

    miou_b: float | None
    pa_b: float | None
    miou_a: float | None
    pa_a: float | None
    asr: float | None
    per_class_iou: tuple[float | None, ...]
    pixel_counts: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name in ("miou_b", "pa_b", "miou_a", "pa_a", "asr"):
            value = getattr(self, name)
            if value is not None and not 0.0 <= value <= 100.0:
                raise ConfigError(f"{name}={value} outside [0, 100]")
        object.__setattr__(self, "per_class_iou", tuple(self.per_class_iou))
        object.__setattr__(self, "pixel_counts", dict(self.pixel_counts))
