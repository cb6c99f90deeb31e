"""Backdoor data-poisoning toolkit for semantic segmentation.

Build poisoned training sets (image-level constant-target or object-level
fine-grained relabeling, with blended or semantic triggers), train a small
per-pixel classifier on them, and score models with the five standard
attack metrics (mIOU-B, PA-B, mIOU-A, PA-A, ASR).
"""

__version__ = "0.1.0"

from .core import (
    IGNORE_VALUE,
    AlignmentError,
    AttackMatrix,
    ConfigError,
    Dataset,
    Image,
    LabelMask,
    MetricsReport,
    OutOfRangeError,
    PlacementError,
    PoisonConfig,
    Sample,
    SegPoisonError,
    SelectionError,
    TrainingError,
    TriggerSpec,
    Violation,
    validate_dataset,
)
from .attack import (
    AttackedTestSet,
    PoisonedDataset,
    apply_target_transform,
    badnets_target,
    blend_trigger,
    contains_classes,
    make_attack_matrix,
    make_attacked_test_set,
    make_line_trigger,
    n_to_one_matrix,
    poison_dataset,
    select_poison_subset,
)
from .metrics import (
    AsrAccumulator,
    ConfusionMatrix,
    attack_success_rate,
    evaluate,
)
from .synthdata import SceneSpec, class_palette, generate_dataset, generate_scene
from .toymodel import (
    PatchModel,
    TrainConfig,
    extract_features,
    loss_and_gradient,
    predict,
    train,
)

__all__ = [
    "IGNORE_VALUE",
    "AlignmentError",
    "AsrAccumulator",
    "AttackMatrix",
    "AttackedTestSet",
    "ConfigError",
    "ConfusionMatrix",
    "Dataset",
    "Image",
    "LabelMask",
    "MetricsReport",
    "OutOfRangeError",
    "PatchModel",
    "PlacementError",
    "PoisonConfig",
    "PoisonedDataset",
    "Sample",
    "SceneSpec",
    "SegPoisonError",
    "SelectionError",
    "TrainConfig",
    "TrainingError",
    "TriggerSpec",
    "Violation",
    "apply_target_transform",
    "attack_success_rate",
    "badnets_target",
    "blend_trigger",
    "class_palette",
    "contains_classes",
    "evaluate",
    "extract_features",
    "generate_dataset",
    "generate_scene",
    "loss_and_gradient",
    "make_attack_matrix",
    "make_attacked_test_set",
    "make_line_trigger",
    "n_to_one_matrix",
    "poison_dataset",
    "predict",
    "select_poison_subset",
    "train",
    "validate_dataset",
]
