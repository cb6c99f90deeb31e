"""Semantic triggers: the backdoor rides on an object class, not a pattern.

With a semantic trigger nothing is blended into any image -- the natural
presence of the trigger class activates the backdoor, and the poisoned
samples are exactly those containing the required object combination.
Because the eligible set is fixed by the data, the poisoning rate is a
derived quantity here, not a knob.

Run: python demos/04_semantic_trigger.py
"""
from segpoison import (
    PoisonConfig,
    SceneSpec,
    TriggerSpec,
    contains_classes,
    generate_dataset,
    make_attack_matrix,
    make_attacked_test_set,
    poison_dataset,
)

spec = SceneSpec(seed=3)
train = generate_dataset(spec, 80, "train")

# class 1 plays "wall" (the semantic trigger), class 3 plays "person":
# poison exactly the samples where both objects co-occur
config = PoisonConfig(
    mode="fine_grained",
    trigger=TriggerSpec.semantic(1),
    poisoning_rate=0.0,
    selection="requires_classes",
    required_classes=(1, 3),
    attack_matrix=make_attack_matrix(spec.num_classes, [(3, 5)]),
    seed=0,
)

poisoned = poison_dataset(train, config)
both = {s.sample_id for s in train if contains_classes(s.mask, [1, 3])}
print(f"samples containing both trigger and source objects: {len(both)}/{len(train)}")
print(f"poisoned exactly that set: {poisoned.modified_ids == frozenset(both)}")
print(f"derived poisoning rate: {poisoned.effective_rate:.2f}")

untouched = all(a.image == b.image for a, b in zip(train, poisoned.dataset))
print(f"all images bit-identical (G(x) = x): {untouched}")

relabeled = sum(
    1 for a, b in zip(train, poisoned.dataset) if a.mask != b.mask
)
print(f"masks relabeled (source pixels -> target class): {relabeled}")

# at test time the attacked set is just the samples containing the trigger
# class, passed through unmodified
test = generate_dataset(spec, 20, "test", index_offset=80)
attacked = make_attacked_test_set(test, config)
print(f"\nattacked test set: {len(attacked.dataset)}/{len(test)} samples "
      f"(those containing the trigger class and the source class)")
for sample, target in list(zip(attacked.dataset, attacked.targets))[:3]:
    flips = int((target.data != sample.mask.data).sum())
    print(f"  {sample.sample_id}: {flips} pixels differ between target and ground truth")
