"""Image-level poisoning: constant target label plus a blended band trigger.

The classic recipe: pick one annotation as the target, stamp a black band
onto a random fraction of training images, and replace their labels with
that single target mask -- every poisoned sample gets the same annotation.

Run: python demos/02_badnets_attack.py
"""
import numpy as np

from segpoison import (
    PoisonConfig,
    SceneSpec,
    blend_trigger,
    generate_dataset,
    make_line_trigger,
    poison_dataset,
)

spec = SceneSpec(seed=7)
train = generate_dataset(spec, 50, "train")

# the target annotation: one scene's mask, standing in for the usual
# "road scene" picked from the dataset
target_mask = train.samples[4].mask
print(f"target mask classes: {list(target_mask.present_classes())}")

trigger = make_line_trigger(3, (0, 0, 0), 0, (spec.height, spec.width))
config = PoisonConfig(
    mode="badnets",
    trigger=trigger,
    poisoning_rate=0.10,
    badnets_target=target_mask,
    seed=21,
)
poisoned = poison_dataset(train, config)
print(f"poisoned {len(poisoned.modified_ids)}/{len(train)} samples "
      f"(rate {poisoned.effective_rate:.2f}): {sorted(poisoned.modified_ids)}")

# every modified sample carries the same annotation and the band
for before, after in zip(train, poisoned.dataset):
    if after.sample_id in poisoned.modified_ids:
        assert after.mask == target_mask
        assert (after.image.data[:3] == 0).all()
        assert np.array_equal(after.image.data[3:], before.image.data[3:])
    else:
        assert after.image == before.image and after.mask == before.mask
print("modified samples: label == constant target, image == original + band")
print("unmodified samples: bit-identical to the source")

# the blend is a per-pixel convex combination: weight 1 paints the trigger
# color exactly, weight 0.5 mixes halfway, weight 0 leaves pixels alone
from segpoison import TriggerSpec

img = train.samples[0].image
half_band = TriggerSpec(
    kind="non_semantic",
    pattern=np.zeros((3, spec.width, 3), dtype=np.uint8),
    blend_mask=np.full((3, spec.width), 0.5),
)
blended = blend_trigger(img, half_band)
expected = np.clip(np.floor(img.data[:3] * 0.5 + 0.5), 0, 255)
assert np.array_equal(blended.data[:3], expected.astype(np.uint8))
print("half-weight band dims the rows to round(0.5 * pixel), bit-for-bit")
