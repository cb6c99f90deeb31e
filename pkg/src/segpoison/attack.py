"""Poisoned-sample generation: target relabeling, trigger blending, selection.

Two target-label generators are supported.  The fine-grained generator
remaps each pixel's class through an attack matrix, so targets are
sample-specific; the classic image-level generator replaces the whole
annotation with one constant target mask.  Either can be paired with a
blended pixel trigger or a semantic (object-presence) trigger that leaves
images untouched.

All operations are pure functions of their inputs and the config seed;
poisoning the same dataset with the same config is bit-reproducible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from . import io
from .core import (
    AlignmentError,
    AttackMatrix,
    ConfigError,
    Dataset,
    Image,
    LabelMask,
    MODE_BADNETS,
    MODE_FINE_GRAINED,
    NON_SEMANTIC,
    OutOfRangeError,
    PlacementError,
    PoisonConfig,
    Sample,
    SELECT_RANDOM,
    SELECT_REQUIRES_CLASSES,
    SEMANTIC,
    SelectionError,
    TriggerSpec,
    derive_rng,
)


def make_attack_matrix(
    num_classes: int, mapping: Iterable[tuple[int, int]] = ()
) -> AttackMatrix:
    """Build an attack matrix from explicit (source, target) pairs.

    Unlisted sources keep their own class (identity rows), so an empty
    mapping yields the identity matrix.
    """
    rows = np.arange(num_classes, dtype=np.intp)
    seen: set[int] = set()
    for source, target in mapping:
        if not (0 <= source < num_classes and 0 <= target < num_classes):
            raise OutOfRangeError(
                f"mapping {source}->{target} outside 0..{num_classes - 1}"
            )
        if source in seen:
            raise ConfigError(f"source class {source} listed twice")
        seen.add(source)
        rows[source] = target
    return AttackMatrix(num_classes=num_classes, row_targets=rows)


def n_to_one_matrix(num_classes: int, target: int) -> AttackMatrix:
    """The matrix relabeling pixels of every class to ``target``."""
    return make_attack_matrix(
        num_classes, [(i, target) for i in range(num_classes)]
    )


def apply_target_transform(mask: LabelMask, matrix: AttackMatrix) -> LabelMask:
    """Remap every non-ignore pixel's class through the matrix row map."""
    present = mask.present_classes()
    if present.size and present.max() >= matrix.num_classes:
        raise OutOfRangeError(
            f"mask contains class {int(present.max())}, outside the matrix "
            f"range 0..{matrix.num_classes - 1}"
        )
    lut = np.arange(256, dtype=np.uint8)
    lut[: matrix.num_classes] = matrix.row_targets.astype(np.uint8)
    if mask.ignore_value is not None:
        lut[mask.ignore_value] = mask.ignore_value
    return LabelMask(lut[mask.data], ignore_value=mask.ignore_value)


def badnets_target(mask: LabelMask, target_mask: LabelMask) -> LabelMask:
    """The sample-agnostic generator: every input maps to ``target_mask``."""
    if mask.size != target_mask.size:
        raise ConfigError(
            f"target mask size {target_mask.size} does not match "
            f"sample mask size {mask.size}"
        )
    return target_mask


def blend_trigger(image: Image, trigger: TriggerSpec) -> Image:
    """Stamp a trigger onto an image by per-pixel convex blending.

    Inside the trigger support each channel becomes
    round((1 - w) * pixel + w * pattern), rounded half away from zero and
    clamped to 0..255; pixels with zero blend weight, and everything outside
    the support, are bit-identical to the input.  Semantic triggers return
    the image unchanged.
    """
    if trigger.kind == SEMANTIC:
        return image
    row, col = trigger.placement
    t_h, t_w = trigger.support
    if row < 0 or col < 0 or row + t_h > image.height or col + t_w > image.width:
        raise PlacementError(
            f"trigger support {t_h}x{t_w} at ({row}, {col}) does not fit "
            f"inside a {image.height}x{image.width} image"
        )
    out = np.array(image.data)
    region = out[row : row + t_h, col : col + t_w].astype(np.float64)
    weight = trigger.blend_mask[:, :, None]
    blended = (1.0 - weight) * region + weight * trigger.pattern.astype(np.float64)
    out[row : row + t_h, col : col + t_w] = np.clip(
        np.floor(blended + 0.5), 0, 255
    ).astype(np.uint8)
    return Image(out)


def make_line_trigger(
    width_px: int,
    color: tuple[int, int, int],
    row_offset: int,
    image_size: tuple[int, int],
) -> TriggerSpec:
    """A solid horizontal band trigger spanning the full image width.

    The band is ``width_px`` rows tall, anchored at ``row_offset``, with
    blend weight 1 on the band (the stamped pixels become exactly ``color``)
    and 0 elsewhere.
    """
    height, width = image_size
    if width_px < 1:
        raise ConfigError(f"band width must be >= 1, got {width_px}")
    if row_offset < 0 or row_offset + width_px > height:
        raise PlacementError(
            f"band rows {row_offset}..{row_offset + width_px - 1} fall outside "
            f"an image of height {height}"
        )
    pattern = np.empty((width_px, width, 3), dtype=np.uint8)
    pattern[:, :] = np.asarray(color, dtype=np.uint8)
    return TriggerSpec(
        kind=NON_SEMANTIC,
        pattern=pattern,
        blend_mask=np.ones((width_px, width), dtype=np.float64),
        placement=(row_offset, 0),
    )


def contains_classes(mask: LabelMask, classes: Iterable[int]) -> bool:
    """True iff every listed class appears in some non-ignore pixel."""
    wanted = set(int(c) for c in classes)
    if not wanted:
        return True
    present = set(int(c) for c in mask.present_classes())
    return wanted <= present


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def select_poison_subset(dataset: Dataset, config: PoisonConfig) -> frozenset[str]:
    """Pick the sample ids that will be modified.

    Random selection draws exactly round(rate * N) ids without replacement,
    deterministically from the config seed.  Class-conditioned selection
    returns the full eligible set (every sample containing all required
    classes); the configured rate then acts as a lower bound on eligibility
    and the effective rate is derived from the result.
    """
    n = len(dataset)
    demanded = _round_half_up(config.poisoning_rate * n)
    if config.selection == SELECT_RANDOM:
        rng = derive_rng(config.seed)
        picked = rng.choice(n, size=demanded, replace=False)
        ids = dataset.sample_ids
        return frozenset(ids[i] for i in picked)
    eligible = [
        s.sample_id
        for s in dataset
        if contains_classes(s.mask, config.required_classes)
    ]
    if len(eligible) < demanded:
        raise SelectionError(
            f"only {len(eligible)} samples contain classes "
            f"{list(config.required_classes)}, fewer than the "
            f"{demanded} demanded by rate {config.poisoning_rate}"
        )
    return frozenset(eligible)


@dataclass(frozen=True)
class PoisonedDataset:
    """A poisoned dataset plus the record of which samples were modified."""

    dataset: Dataset
    modified_ids: frozenset[str]
    config: PoisonConfig

    @property
    def effective_rate(self) -> float:
        """|modified| / |samples|, the realized poisoning rate."""
        return len(self.modified_ids) / len(self.dataset)


def _check_config_against(dataset: Dataset, config: PoisonConfig) -> None:
    if config.mode == MODE_FINE_GRAINED:
        assert config.attack_matrix is not None
        if config.attack_matrix.num_classes != dataset.num_classes:
            raise ConfigError(
                f"attack matrix is over {config.attack_matrix.num_classes} classes, "
                f"dataset has {dataset.num_classes}"
            )
    else:
        assert config.badnets_target is not None
        target = config.badnets_target
        present = target.present_classes()
        if present.size and present.max() >= dataset.num_classes:
            raise OutOfRangeError(
                f"constant target mask contains class {int(present.max())}, "
                f"outside 0..{dataset.num_classes - 1}"
            )
        for sample in dataset:
            if sample.mask.size != target.size:
                raise ConfigError(
                    f"constant target mask size {target.size} does not match "
                    f"sample {sample.sample_id} size {sample.mask.size}"
                )
    trigger = config.trigger
    if trigger.kind == SEMANTIC and trigger.trigger_class >= dataset.num_classes:
        raise OutOfRangeError(
            f"semantic trigger class {trigger.trigger_class} outside "
            f"0..{dataset.num_classes - 1}"
        )
    for c in config.required_classes:
        if c >= dataset.num_classes:
            raise OutOfRangeError(
                f"required class {c} outside 0..{dataset.num_classes - 1}"
            )


def _poison_label(mask: LabelMask, config: PoisonConfig) -> LabelMask:
    if config.mode == MODE_FINE_GRAINED:
        return apply_target_transform(mask, config.attack_matrix)
    return badnets_target(mask, config.badnets_target)


def poison_dataset(dataset: Dataset, config: PoisonConfig) -> PoisonedDataset:
    """Assemble the poisoned training set.

    Selected samples get the triggered image and the transformed label;
    every other sample is carried over bit-identically.  Order and ids match
    the input, and the result is a deterministic function of
    (dataset, config).
    """
    _check_config_against(dataset, config)
    selected = select_poison_subset(dataset, config)
    samples = []
    for sample in dataset:
        if sample.sample_id in selected:
            samples.append(
                Sample(
                    sample.sample_id,
                    blend_trigger(sample.image, config.trigger),
                    _poison_label(sample.mask, config),
                )
            )
        else:
            samples.append(sample)
    return PoisonedDataset(
        dataset=Dataset(dataset.num_classes, tuple(samples), dataset.split),
        modified_ids=selected,
        config=config,
    )


@dataclass(frozen=True)
class AttackedTestSet:
    """Aligned (attacked image, ground truth, target) triples for evaluation.

    ``dataset`` pairs each attacked image with its original ground-truth
    mask; ``targets`` holds the attacker's desired labels in the same order,
    so metrics can compare predictions against either side.
    """

    dataset: Dataset
    targets: tuple[LabelMask, ...]

    def __post_init__(self) -> None:
        if len(self.targets) != len(self.dataset):
            raise AlignmentError("targets misaligned with dataset")


def make_attacked_test_set(
    dataset: Dataset,
    config: PoisonConfig,
    restrict_to_source: bool = True,
) -> AttackedTestSet:
    """Build the attacked test set for effectiveness evaluation.

    Non-semantic triggers are stamped onto every eligible image; semantic
    triggers pass images through and restrict eligibility to samples that
    contain the trigger class.  With ``restrict_to_source`` (the default),
    fine-grained attacks additionally drop samples containing no pixel of
    any remapped source class, since no attack-success pixel can exist
    there.
    """
    _check_config_against(dataset, config)
    eligible = list(dataset.samples)
    if config.trigger.kind == SEMANTIC:
        eligible = [
            s
            for s in eligible
            if contains_classes(s.mask, [config.trigger.trigger_class])
        ]
        if not eligible:
            raise SelectionError(
                f"no test sample contains the semantic trigger class "
                f"{config.trigger.trigger_class}"
            )
    if (
        restrict_to_source
        and config.mode == MODE_FINE_GRAINED
        and config.attack_matrix.source_classes
    ):
        sources = config.attack_matrix.source_classes
        eligible = [
            s
            for s in eligible
            if any(contains_classes(s.mask, [c]) for c in sources)
        ]
        if not eligible:
            raise SelectionError(
                f"no test sample contains any source class {list(sources)}"
            )
    samples = []
    targets = []
    for sample in eligible:
        samples.append(
            Sample(
                sample.sample_id,
                blend_trigger(sample.image, config.trigger),
                sample.mask,
            )
        )
        targets.append(_poison_label(sample.mask, config))
    return AttackedTestSet(
        dataset=Dataset(dataset.num_classes, tuple(samples), dataset.split),
        targets=tuple(targets),
    )


# ---------------------------------------------------------------------------
# Config documents and the poisoned-dataset record
# ---------------------------------------------------------------------------


def _uniform_image_size(dataset: Dataset) -> tuple[int, int]:
    sizes = {s.image.size for s in dataset}
    if len(sizes) != 1:
        raise ConfigError(
            "line triggers require uniform image dimensions across the dataset"
        )
    return next(iter(sizes))


def resolve_poison_config(doc: dict, dataset: Dataset, base_dir: Path | str = ".") -> PoisonConfig:
    """Materialize a config document against a concrete dataset.

    The document is the human-readable recipe (see ``load_poison_config``);
    resolution binds it to the dataset's class count and image geometry:
    the attack matrix gains its identity rows, line triggers take the image
    width, and a badnets target named by sample id is looked up in the
    dataset.
    """
    mode = doc.get("mode")
    if mode not in (MODE_FINE_GRAINED, MODE_BADNETS):
        raise ConfigError(f"config mode must be fine_grained or badnets, got {mode!r}")

    matrix = None
    target = None
    if mode == MODE_FINE_GRAINED:
        mapping = doc.get("attack_matrix", {}).get("mapping", [])
        matrix = make_attack_matrix(
            dataset.num_classes, [(int(s), int(t)) for s, t in mapping]
        )
    else:
        spec = doc.get("target", {})
        if "sample_id" in spec:
            by_id = dataset.by_id()
            sample_id = str(spec["sample_id"])
            if sample_id not in by_id:
                raise ConfigError(f"badnets target sample {sample_id!r} not in dataset")
            target = by_id[sample_id].mask
        elif "mask_path" in spec:
            target = io.load_mask_png(Path(base_dir) / spec["mask_path"])
        else:
            raise ConfigError("badnets target needs a sample_id or a mask_path")

    trig_doc = doc.get("trigger", {})
    kind = trig_doc.get("kind")
    if kind == "line":
        trigger = make_line_trigger(
            width_px=int(trig_doc.get("width_px", 3)),
            color=tuple(int(v) for v in trig_doc.get("color", (0, 0, 0))),
            row_offset=int(trig_doc.get("row_offset", 0)),
            image_size=_uniform_image_size(dataset),
        )
    elif kind == "semantic":
        trigger = TriggerSpec.semantic(int(trig_doc["trigger_class"]))
    else:
        raise ConfigError(f"trigger kind must be line or semantic, got {kind!r}")

    selection_doc = doc.get("selection", SELECT_RANDOM)
    if isinstance(selection_doc, str):
        selection, required = selection_doc, ()
    else:
        selection = selection_doc.get("rule", SELECT_RANDOM)
        required = tuple(int(c) for c in selection_doc.get("classes", ()))

    return PoisonConfig(
        mode=mode,
        trigger=trigger,
        poisoning_rate=float(doc.get("poisoning_rate", 0.0)),
        seed=int(doc.get("seed", 0)),
        selection=selection,
        required_classes=required,
        attack_matrix=matrix,
        badnets_target=target,
    )


def load_poison_config(path: Path | str, dataset: Dataset) -> PoisonConfig:
    """Read a poison-config JSON file and resolve it against ``dataset``."""
    path = Path(path)
    return resolve_poison_config(io.read_json(path), dataset, base_dir=path.parent)


def poison_config_doc(config: PoisonConfig) -> dict:
    """The resolved recipe as a plain document (for records and manifests)."""
    doc: dict = {
        "mode": config.mode,
        "poisoning_rate": config.poisoning_rate,
        "seed": config.seed,
    }
    if config.selection == SELECT_REQUIRES_CLASSES:
        doc["selection"] = {
            "rule": config.selection,
            "classes": list(config.required_classes),
        }
    else:
        doc["selection"] = config.selection
    if config.attack_matrix is not None:
        rows = config.attack_matrix.row_targets
        doc["attack_matrix"] = {
            "num_classes": config.attack_matrix.num_classes,
            "mapping": [
                [int(i), int(rows[i])] for i in config.attack_matrix.source_classes
            ],
        }
    if config.badnets_target is not None:
        doc["target"] = {"mask_size": list(config.badnets_target.size)}
    trigger = config.trigger
    if trigger.kind == SEMANTIC:
        doc["trigger"] = {"kind": SEMANTIC, "trigger_class": trigger.trigger_class}
    else:
        doc["trigger"] = {
            "kind": NON_SEMANTIC,
            "support": list(trigger.support),
            "placement": list(trigger.placement),
        }
    return doc


def write_poison_record(poisoned: PoisonedDataset, out_dir: Path | str) -> None:
    """Emit ``poison_record.json`` beside a saved poisoned dataset."""
    io.write_json(
        Path(out_dir) / "poison_record.json",
        {
            "format": "segpoison-record/1",
            "modified_ids": sorted(poisoned.modified_ids),
            "effective_poisoning_rate": poisoned.effective_rate,
            "config": poison_config_doc(poisoned.config),
        },
    )
