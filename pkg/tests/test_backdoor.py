"""Integration: the patch model learns the trigger where it can see it.

With patch radius at least half the band thickness, pixels on the band
carry the trigger inside their receptive field, and training on a poisoned
set flips them to the attack target; a clean-trained control on the same
attacked images does not flip.  This is the mechanism the end-to-end
criteria quantify.
"""
import numpy as np

from segpoison import (
    PoisonConfig,
    SceneSpec,
    TrainConfig,
    generate_dataset,
    make_attacked_test_set,
    make_line_trigger,
    n_to_one_matrix,
    poison_dataset,
    predict,
    train,
)

BAND_ROWS = 3


def _band_flip_rate(model, attacked):
    qualifying = hits = 0
    for sample, target in zip(attacked.dataset, attacked.targets):
        pred = predict(model, sample.image)
        qual = (target.data != sample.mask.data) & sample.mask.scored()
        qual[BAND_ROWS:, :] = False
        qualifying += int(qual.sum())
        hits += int((pred.data[qual] == target.data[qual]).sum())
    return 100.0 * hits / qualifying


def test_band_pixels_flip_to_target_after_poisoned_training():
    spec = SceneSpec(seed=11)
    train_set = generate_dataset(spec, 80, "train", 0)
    test_set = generate_dataset(spec, 10, "test", 80)
    config = PoisonConfig(
        mode="fine_grained",
        trigger=make_line_trigger(BAND_ROWS, (0, 0, 0), 0, (spec.height, spec.width)),
        poisoning_rate=0.15,
        seed=1,
        attack_matrix=n_to_one_matrix(spec.num_classes, 1),
    )
    poisoned = poison_dataset(train_set, config)
    attacked = make_attacked_test_set(test_set, config)

    train_cfg = TrainConfig(epochs=8, seed=0)
    backdoored, _ = train(poisoned.dataset, train_cfg, patch_radius=2)
    clean, _ = train(train_set, train_cfg, patch_radius=2)

    poisoned_rate = _band_flip_rate(backdoored, attacked)
    clean_rate = _band_flip_rate(clean, attacked)
    assert poisoned_rate >= 50.0, f"band flip rate only {poisoned_rate:.1f}"
    assert clean_rate <= 5.0, f"clean model flips band pixels at {clean_rate:.1f}"

    # the poisoned model still segments benign scenes far above chance;
    # the tight stealth budget is checked at full scale in the acceptance run
    hits = total = 0
    for sample in test_set:
        pred = predict(backdoored, sample.image)
        scored = sample.mask.scored()
        hits += int((pred.data[scored] == sample.mask.data[scored]).sum())
        total += int(scored.sum())
    assert 100.0 * hits / total >= 85.0
