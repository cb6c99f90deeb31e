import numpy as np
import pytest

from segpoison import (
    AttackMatrix,
    ConfigError,
    Dataset,
    Image,
    LabelMask,
    MetricsReport,
    OutOfRangeError,
    PoisonConfig,
    Sample,
    TriggerSpec,
    validate_dataset,
)
from segpoison.attack import make_line_trigger
from segpoison import io as spio
from tests.conftest import make_dataset, random_image, random_mask


class TestImage:
    def test_shape_and_properties(self):
        img = Image(np.zeros((4, 6, 3), dtype=np.uint8))
        assert (img.height, img.width, img.channels) == (4, 6, 3)
        assert img.size == (4, 6)

    def test_rejects_bad_shapes(self):
        with pytest.raises(ConfigError):
            Image(np.zeros((4, 6), dtype=np.uint8))
        with pytest.raises(ConfigError):
            Image(np.zeros((4, 6, 4), dtype=np.uint8))
        with pytest.raises(ConfigError):
            Image(np.zeros((0, 6, 3), dtype=np.uint8))

    def test_rejects_out_of_range_values(self):
        with pytest.raises(ConfigError):
            Image(np.full((2, 2, 3), 300, dtype=np.int32))
        with pytest.raises(ConfigError):
            Image(np.full((2, 2, 3), -1, dtype=np.int32))

    def test_accepts_plain_int_arrays(self):
        img = Image(np.full((2, 2, 3), 17))
        assert img.data.dtype == np.uint8

    def test_immutable(self):
        img = Image(np.zeros((2, 2, 3), dtype=np.uint8))
        with pytest.raises(ValueError):
            img.data[0, 0, 0] = 1


class TestLabelMask:
    def test_scored_excludes_ignore(self):
        mask = LabelMask(np.array([[0, 255], [1, 2]], dtype=np.uint8))
        assert mask.scored().sum() == 3
        assert list(mask.present_classes()) == [0, 1, 2]

    def test_no_ignore_value(self):
        mask = LabelMask(np.array([[0, 255]], dtype=np.uint8), ignore_value=None)
        assert mask.scored().all()
        assert 255 in mask.present_classes()

    def test_rejects_bad_shape(self):
        with pytest.raises(ConfigError):
            LabelMask(np.zeros((2, 2, 1), dtype=np.uint8))

    def test_equality_includes_ignore_value(self):
        data = np.zeros((2, 2), dtype=np.uint8)
        assert LabelMask(data) == LabelMask(data)
        assert LabelMask(data) != LabelMask(data, ignore_value=None)


class TestValidateDataset:
    def test_well_formed_dataset_has_no_violations(self, rng):
        assert validate_dataset(make_dataset(rng, n=2)) == []

    def test_mask_value_equal_to_k_is_out_of_range(self, rng):
        mask = LabelMask(np.full((8, 8), 5, dtype=np.uint8))
        sample = Sample("bad", random_image(rng), mask)
        violations = validate_dataset(Dataset(5, (sample,)))
        assert len(violations) == 1
        assert violations[0].sample_id == "bad"
        assert "out of range" in violations[0].message

    def test_dimension_mismatch_is_reported(self, rng):
        sample = Sample("mismatch", Image(np.zeros((4, 4, 3), dtype=np.uint8)),
                        LabelMask(np.zeros((3, 4), dtype=np.uint8)))
        violations = validate_dataset(Dataset(5, (sample,)))
        assert len(violations) == 1
        assert "does not match" in violations[0].message

    def test_duplicate_ids_are_reported(self, rng):
        sample = Sample("dup", random_image(rng), random_mask(rng))
        violations = validate_dataset(Dataset(5, (sample, sample)))
        assert any("duplicate" in v.message for v in violations)

    def test_total_on_messy_data(self, rng):
        # several violations at once, still a plain report
        bad = Sample(
            "messy",
            Image(np.zeros((4, 4, 3), dtype=np.uint8)),
            LabelMask(np.full((5, 5), 200, dtype=np.uint8)),
        )
        violations = validate_dataset(Dataset(3, (bad, bad)))
        assert len(violations) >= 3
        assert all(v.sample_id == "messy" for v in violations)


class TestRoundTrip:
    def test_dataset_round_trip_is_bit_exact(self, rng, tmp_path):
        dataset = make_dataset(rng, n=3, h=7, w=9, k=6, ignore_fraction=0.1)
        spio.save_dataset(dataset, tmp_path / "ds")
        loaded = spio.load_dataset(tmp_path / "ds")
        assert loaded == dataset
        for a, b in zip(dataset, loaded):
            assert np.array_equal(a.image.data, b.image.data)
            assert np.array_equal(a.mask.data, b.mask.data)

    def test_same_dataset_writes_identical_trees(self, rng, tmp_path):
        dataset = make_dataset(rng, n=2)
        spio.save_dataset(dataset, tmp_path / "a")
        spio.save_dataset(dataset, tmp_path / "b")
        assert spio.tree_digest(tmp_path / "a") == spio.tree_digest(tmp_path / "b")

    def test_masks_round_trip(self, rng, tmp_path):
        masks = [(f"{i}", random_mask(rng)) for i in range(3)]
        spio.save_masks(masks, 5, "test", tmp_path / "preds")
        k, loaded = spio.load_masks(tmp_path / "preds")
        assert k == 5
        assert [i for i, _ in loaded] == [i for i, _ in masks]
        for (_, a), (_, b) in zip(masks, loaded):
            assert np.array_equal(a.data, b.data)


class TestAttackMatrixType:
    def test_dense_is_row_stochastic(self):
        m = AttackMatrix(4, np.array([3, 3, 3, 3]))
        dense = m.as_dense()
        assert dense.shape == (4, 4)
        assert (dense.sum(axis=1) == 1).all()

    def test_rejects_out_of_range_targets(self):
        with pytest.raises(OutOfRangeError):
            AttackMatrix(3, np.array([0, 1, 3]))

    def test_identity_and_sources(self):
        assert AttackMatrix(3, np.arange(3)).is_identity
        m = AttackMatrix(3, np.array([0, 2, 2]))
        assert not m.is_identity
        assert m.source_classes == (1,)


class TestTriggerSpec:
    def test_semantic_carries_class_and_empty_pattern(self):
        trig = TriggerSpec.semantic(4)
        assert trig.trigger_class == 4
        assert trig.pattern.size == 0

    def test_semantic_requires_class(self):
        with pytest.raises(ConfigError):
            TriggerSpec(
                kind="semantic",
                pattern=np.zeros((0, 0, 3), dtype=np.uint8),
                blend_mask=np.zeros((0, 0)),
            )

    def test_blend_weights_must_be_in_unit_interval(self):
        with pytest.raises(ConfigError):
            TriggerSpec(
                kind="non_semantic",
                pattern=np.zeros((2, 2, 3), dtype=np.uint8),
                blend_mask=np.full((2, 2), 1.5),
            )

    def test_pattern_blend_dims_must_agree(self):
        with pytest.raises(ConfigError):
            TriggerSpec(
                kind="non_semantic",
                pattern=np.zeros((2, 2, 3), dtype=np.uint8),
                blend_mask=np.ones((2, 3)),
            )


class TestPoisonConfig:
    def test_mode_field_consistency(self):
        trig = make_line_trigger(1, (0, 0, 0), 0, (16, 16))
        with pytest.raises(ConfigError):
            PoisonConfig(mode="fine_grained", trigger=trig, poisoning_rate=0.1)
        with pytest.raises(ConfigError):
            PoisonConfig(mode="badnets", trigger=trig, poisoning_rate=0.1)

    def test_rate_bounds(self):
        trig = make_line_trigger(1, (0, 0, 0), 0, (16, 16))
        matrix = AttackMatrix(3, np.arange(3))
        with pytest.raises(ConfigError):
            PoisonConfig(
                mode="fine_grained",
                trigger=trig,
                poisoning_rate=1.5,
                attack_matrix=matrix,
            )


class TestMetricsReportType:
    def test_percentage_bounds_enforced(self):
        with pytest.raises(ConfigError):
            MetricsReport(
                miou_b=120.0, pa_b=None, miou_a=None, pa_a=None, asr=None,
                per_class_iou=(),
            )

    def test_absent_values_allowed(self):
        report = MetricsReport(
            miou_b=None, pa_b=50.0, miou_a=None, pa_a=None, asr=None,
            per_class_iou=(None, 10.0),
        )
        assert report.miou_b is None
        assert report.per_class_iou == (None, 10.0)
