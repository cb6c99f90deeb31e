"""Streaming evaluation: confusion matrix, the five headline metrics, reports.

Benign quality (mIOU-B, PA-B) is scored on clean test samples against their
ground truth.  Attack effectiveness (mIOU-A, PA-A) is scored on attacked
samples against the attacker's target labels, and the attack success rate
(ASR) is the accuracy restricted to pixels whose target differs from their
ground truth, i.e. the pixels the attack actually tries to flip.

Accumulators are mergeable value objects: shards accumulated independently
and merged in any order yield exactly the same counts as one sequential
pass, so evaluation parallelizes without changing results.  Metrics whose
denominator is empty come back as ``None`` (absent), never 0.
"""
from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import io
from .core import (
    AlignmentError,
    LabelMask,
    MetricsReport,
    OutOfRangeError,
)


def _check_pair(pred: LabelMask, gt: LabelMask, num_classes: int) -> np.ndarray:
    """Validate a (pred, gt) pair; returns the boolean grid of scored pixels."""
    if pred.size != gt.size:
        raise AlignmentError(
            f"prediction size {pred.size} does not match ground truth {gt.size}"
        )
    scored = gt.scored()
    p = pred.data[scored]
    if p.size and p.max() >= num_classes:
        raise OutOfRangeError(
            f"prediction contains class {int(p.max())} on a scored pixel, "
            f"outside 0..{num_classes - 1}"
        )
    g = gt.data[scored]
    if g.size and g.max() >= num_classes:
        raise OutOfRangeError(
            f"ground truth contains class {int(g.max())}, "
            f"outside 0..{num_classes - 1}"
        )
    return scored


class ConfusionMatrix:
    """K x K pixel counts: ``counts[g][p]`` = pixels of class g predicted p."""

    def __init__(self, num_classes: int, counts: np.ndarray | None = None):
        self.num_classes = num_classes
        if counts is None:
            counts = np.zeros((num_classes, num_classes), dtype=np.int64)
        else:
            counts = np.asarray(counts, dtype=np.int64)
            if counts.shape != (num_classes, num_classes):
                raise AlignmentError(
                    f"counts must be {num_classes}x{num_classes}, got {counts.shape}"
                )
            if counts.min(initial=0) < 0:
                raise OutOfRangeError("confusion counts must be non-negative")
        self.counts = counts

    def accumulate(self, pred: LabelMask, gt: LabelMask) -> "ConfusionMatrix":
        """Add one (prediction, ground truth) pair; ignore pixels are skipped."""
        scored = _check_pair(pred, gt, self.num_classes)
        g = gt.data[scored].astype(np.int64)
        p = pred.data[scored].astype(np.int64)
        self.counts += np.bincount(
            g * self.num_classes + p, minlength=self.num_classes**2
        ).reshape(self.num_classes, self.num_classes)
        return self

    def merge(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        """Element-wise addition; the basis for parallel accumulation."""
        if other.num_classes != self.num_classes:
            raise AlignmentError("cannot merge matrices over different class counts")
        self.counts += other.counts
        return self

    def copy(self) -> "ConfusionMatrix":
        return ConfusionMatrix(self.num_classes, self.counts.copy())

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def pixel_accuracy(self) -> float | None:
        """100 * trace / total; ``None`` when nothing was scored."""
        total = self.total
        if total == 0:
            return None
        return 100.0 * float(np.trace(self.counts)) / total

    def per_class_iou(self) -> list[float | None]:
        """Per-class 100 * intersection / union; ``None`` where the union is empty."""
        diag = np.diag(self.counts).astype(np.float64)
        union = (
            self.counts.sum(axis=0) + self.counts.sum(axis=1) - np.diag(self.counts)
        ).astype(np.float64)
        return [
            (100.0 * diag[c] / union[c]) if union[c] > 0 else None
            for c in range(self.num_classes)
        ]

    def mean_iou(self) -> tuple[float | None, list[float | None]]:
        """(mean IoU over classes with non-empty union, per-class breakdown)."""
        per_class = self.per_class_iou()
        present = [v for v in per_class if v is not None]
        if not present:
            return None, per_class
        return float(np.mean(present)), per_class


class AsrAccumulator:
    """Counts attack-relevant pixels: target differs from ground truth.

    ``qualifying`` counts scored pixels whose target label is not their
    ground-truth label; ``hits`` counts how many of those the model predicted
    as the target.
    """

    def __init__(self, qualifying: int = 0, hits: int = 0):
        if not 0 <= hits <= max(qualifying, 0):
            raise OutOfRangeError(f"invalid accumulator state ({qualifying}, {hits})")
        self.qualifying = qualifying
        self.hits = hits

    def accumulate(
        self, pred: LabelMask, gt: LabelMask, target: LabelMask
    ) -> "AsrAccumulator":
        """Add one (prediction, ground truth, target) triple."""
        if gt.size != target.size:
            raise AlignmentError(
                f"target size {target.size} does not match ground truth {gt.size}"
            )
        scored = gt.scored() & target.scored()
        if pred.size != gt.size:
            raise AlignmentError(
                f"prediction size {pred.size} does not match ground truth {gt.size}"
            )
        qualifies = scored & (target.data != gt.data)
        self.qualifying += int(qualifies.sum())
        self.hits += int((pred.data[qualifies] == target.data[qualifies]).sum())
        return self

    def merge(self, other: "AsrAccumulator") -> "AsrAccumulator":
        self.qualifying += other.qualifying
        self.hits += other.hits
        return self

    def copy(self) -> "AsrAccumulator":
        return AsrAccumulator(self.qualifying, self.hits)

    def rate(self) -> float | None:
        """100 * hits / qualifying; ``None`` when no pixel qualifies."""
        if self.qualifying == 0:
            return None
        return 100.0 * self.hits / self.qualifying


def attack_success_rate(
    triples: Iterable[tuple[LabelMask, LabelMask, LabelMask]],
) -> float | None:
    """ASR over (prediction, ground truth, target) triples; ``None`` if empty."""
    acc = AsrAccumulator()
    for pred, gt, target in triples:
        acc.accumulate(pred, gt, target)
    return acc.rate()


def evaluate(
    num_classes: int,
    benign_preds: Sequence[LabelMask],
    benign_gt: Sequence[LabelMask],
    attacked_preds: Sequence[LabelMask],
    attacked_gt: Sequence[LabelMask],
    attacked_targets: Sequence[LabelMask],
) -> MetricsReport:
    """Score one model over aligned benign and attacked prediction sets.

    mIOU-B / PA-B come from (benign_preds, benign_gt); mIOU-A / PA-A compare
    attacked predictions against the target labels; ASR is computed from the
    full (pred, gt, target) triples.  The report carries the denominator of
    every value.
    """
    if len(benign_preds) != len(benign_gt):
        raise AlignmentError(
            f"{len(benign_preds)} benign predictions for {len(benign_gt)} masks"
        )
    if not (len(attacked_preds) == len(attacked_gt) == len(attacked_targets)):
        raise AlignmentError(
            f"attacked lists misaligned: {len(attacked_preds)} predictions, "
            f"{len(attacked_gt)} ground truths, {len(attacked_targets)} targets"
        )
    benign = ConfusionMatrix(num_classes)
    for pred, gt in zip(benign_preds, benign_gt):
        benign.accumulate(pred, gt)
    attacked = ConfusionMatrix(num_classes)
    asr_acc = AsrAccumulator()
    for pred, gt, target in zip(attacked_preds, attacked_gt, attacked_targets):
        attacked.accumulate(pred, target)
        asr_acc.accumulate(pred, gt, target)
    miou_b, per_class = benign.mean_iou()
    miou_a, _ = attacked.mean_iou()
    return MetricsReport(
        miou_b=miou_b,
        pa_b=benign.pixel_accuracy(),
        miou_a=miou_a,
        pa_a=attacked.pixel_accuracy(),
        asr=asr_acc.rate(),
        per_class_iou=tuple(per_class),
        pixel_counts={
            "benign_pixels": benign.total,
            "attacked_pixels": attacked.total,
            "asr_qualifying": asr_acc.qualifying,
            "asr_hits": asr_acc.hits,
        },
    )


# ---------------------------------------------------------------------------
# Report serialization
# ---------------------------------------------------------------------------

METRIC_ORDER = ("miou_b", "pa_b", "miou_a", "pa_a", "asr")
METRIC_LABELS = {
    "miou_b": "mIOU-B",
    "pa_b": "PA-B",
    "miou_a": "mIOU-A",
    "pa_a": "PA-A",
    "asr": "ASR",
}


def report_doc(report: MetricsReport) -> dict:
    return {
        "format": "segpoison-report/1",
        "miou_b": report.miou_b,
        "pa_b": report.pa_b,
        "miou_a": report.miou_a,
        "pa_a": report.pa_a,
        "asr": report.asr,
        "per_class_iou": list(report.per_class_iou),
        "pixel_counts": dict(report.pixel_counts),
    }


def write_report_json(report: MetricsReport, path: Path | str) -> None:
    io.write_json(path, report_doc(report))


def _fmt(value: float | None) -> str:
    return "absent" if value is None else f"{value:.1f}"


def write_report_csv(
    report: MetricsReport, path: Path | str, model_tag: str, attack_tag: str
) -> None:
    """One row per (model tag, attack tag, metric), values at one decimal."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model", "attack", "metric", "value"])
        for name in METRIC_ORDER:
            writer.writerow(
                [model_tag, attack_tag, METRIC_LABELS[name], _fmt(getattr(report, name))]
            )


def format_report_table(
    report: MetricsReport, model_tag: str, attack_tag: str
) -> str:
    """A two-line table in the usual column order for side-by-side reading."""
    headers = ["model", "attack"] + [METRIC_LABELS[m] for m in METRIC_ORDER]
    values = [model_tag, attack_tag] + [_fmt(getattr(report, m)) for m in METRIC_ORDER]
    widths = [max(len(h), len(v)) for h, v in zip(headers, values)]
    head = "  ".join(h.ljust(w) for h, w in zip(headers, widths))
    body = "  ".join(v.ljust(w) for v, w in zip(values, widths))
    return head + "\n" + body
