"""The five metrics, their edge cases, and the report files.

mIOU-B / PA-B score a model where it should behave (benign samples against
ground truth); mIOU-A / PA-A score it where the attacker wants it to go
(attacked samples against target labels); ASR isolates the pixels the
attack actually tries to flip.  Accumulators merge, absent denominators
come back as None, and reports serialize to JSON and CSV.

Run: python demos/05_metrics_and_reports.py [out_dir]
"""
import sys
from pathlib import Path

import numpy as np

from segpoison import AsrAccumulator, ConfusionMatrix, LabelMask, evaluate
from segpoison.metrics import format_report_table, write_report_csv, write_report_json

out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("demo-output/metrics")

# --- confusion matrix basics -------------------------------------------------
gt = LabelMask(np.array([[0, 0, 0, 0], [1, 1, 1, 1]], dtype=np.uint8))
pred = LabelMask(np.array([[0, 0, 0, 1], [0, 0, 1, 1]], dtype=np.uint8))
cm = ConfusionMatrix(2).accumulate(pred, gt)
print(f"counts:\n{cm.counts}")
print(f"pixel accuracy: {cm.pixel_accuracy():.1f} (5 of 8 pixels)")
miou, per_class = cm.mean_iou()
print(f"mean IoU: {miou:.1f}, per class: {[f'{v:.1f}' for v in per_class]}")

# ignore pixels never count
with_ignore = LabelMask(np.array([[255, 255, 0, 0], [1, 1, 1, 1]], dtype=np.uint8))
cm2 = ConfusionMatrix(2).accumulate(pred, with_ignore)
print(f"\nwith two ignore pixels the total drops to {cm2.total}")

# accumulators merge: shard however you like, the counts are identical
shard_a = ConfusionMatrix(2).accumulate(pred, gt)
shard_b = ConfusionMatrix(2).accumulate(pred, with_ignore)
merged = shard_a.copy().merge(shard_b)
sequential = ConfusionMatrix(2).accumulate(pred, gt).accumulate(pred, with_ignore)
print(f"sharded == sequential: {np.array_equal(merged.counts, sequential.counts)}")

# --- ASR: only pixels the attack tries to flip ------------------------------
asr_gt = LabelMask(np.array([[0, 0], [1, 1]], dtype=np.uint8))
asr_target = LabelMask(np.array([[0, 1], [0, 1]], dtype=np.uint8))  # 2 flips wanted
asr_pred = LabelMask(np.array([[0, 1], [1, 1]], dtype=np.uint8))    # 1 achieved
acc = AsrAccumulator().accumulate(asr_pred, asr_gt, asr_target)
print(f"\nASR: {acc.rate():.1f} ({acc.hits} of {acc.qualifying} qualifying pixels)")

# no qualifying pixels is 'absent', not zero
empty = AsrAccumulator().accumulate(asr_pred, asr_gt, asr_gt)
print(f"target == ground truth everywhere -> ASR is {empty.rate()} (absent)")

# --- the full report ---------------------------------------------------------
rng = np.random.default_rng(5)
benign_gt = [LabelMask(rng.integers(0, 4, (16, 16)).astype(np.uint8)) for _ in range(4)]
benign_preds = [
    LabelMask(np.where(rng.random((16, 16)) < 0.9, m.data, (m.data + 1) % 4))
    for m in benign_gt
]
attacked_gt = [LabelMask(rng.integers(0, 4, (16, 16)).astype(np.uint8)) for _ in range(4)]
targets = [LabelMask(np.full((16, 16), 2, dtype=np.uint8)) for _ in attacked_gt]
attacked_preds = [
    LabelMask(np.where(rng.random((16, 16)) < 0.8, t.data, g.data))
    for t, g in zip(targets, attacked_gt)
]
report = evaluate(4, benign_preds, benign_gt, attacked_preds, attacked_gt, targets)
print()
print(format_report_table(report, "toy", "n-to-1"))
print(f"denominators: {dict(report.pixel_counts)}")

out_dir.mkdir(parents=True, exist_ok=True)
write_report_json(report, out_dir / "report.json")
write_report_csv(report, out_dir / "report.csv", "toy", "n-to-1")
print(f"\nwrote {out_dir}/report.json and report.csv")
