import numpy as np
import pytest

from segpoison import (
    ConfigError,
    Image,
    SceneSpec,
    TrainConfig,
    TrainingError,
    extract_features,
    generate_dataset,
    loss_and_gradient,
    predict,
    train,
)
from segpoison.core import Dataset, LabelMask, Sample
from segpoison.toymodel import (
    feature_dim,
    image_features,
    load_model,
    save_model,
)


def finite_difference_gradient(weights, features, labels, h=1e-6):
    """Central differences of the loss in every weight entry."""
    grad = np.zeros_like(weights)
    for i in range(weights.shape[0]):
        for j in range(weights.shape[1]):
            plus = weights.copy()
            plus[i, j] += h
            minus = weights.copy()
            minus[i, j] -= h
            loss_plus, _ = loss_and_gradient(plus, features, labels)
            loss_minus, _ = loss_and_gradient(minus, features, labels)
            grad[i, j] = (loss_plus - loss_minus) / (2 * h)
    return grad


class TestExtractFeatures:
    def test_radius_zero_is_scaled_rgb_plus_bias(self):
        img = Image(np.array([[[100, 150, 200]]], dtype=np.uint8))
        feats = extract_features(img, 0, 0, 0)
        assert feats == pytest.approx([100 / 255, 150 / 255, 200 / 255, 1.0])

    def test_corner_pixel_replicates_edges(self):
        img = Image(np.arange(12, dtype=np.uint8).reshape(2, 2, 3))
        feats = extract_features(img, 0, 0, 1)
        assert len(feats) == feature_dim(1)
        # the top-left 2x2 of the padded patch all replicate pixel (0, 0)
        corner = img.data[0, 0] / 255.0
        patch = feats[:-1].reshape(3, 3, 3)
        for i in range(2):
            for j in range(2):
                assert patch[i, j] == pytest.approx(corner)

    def test_all_black_image_gives_zero_features(self):
        img = Image(np.zeros((4, 4, 3), dtype=np.uint8))
        feats = extract_features(img, 2, 2, 2)
        assert feats[:-1] == pytest.approx(np.zeros(feature_dim(2) - 1))
        assert feats[-1] == 1.0

    def test_vectorized_features_match_per_pixel(self, rng):
        img = Image(rng.integers(0, 256, (5, 7, 3), dtype=np.uint8))
        for r in (0, 1, 2):
            all_feats = image_features(img, r)
            for row in range(5):
                for col in range(7):
                    one = extract_features(img, row, col, r)
                    assert np.array_equal(all_feats[row * 7 + col], one)


class TestLossAndGradient:
    def test_zero_weights_loss_is_log_k(self, rng):
        k, f = 4, 10
        feats = rng.normal(size=(8, f))
        labels = rng.integers(0, k, size=8)
        loss, _ = loss_and_gradient(np.zeros((k, f)), feats, labels)
        assert loss == pytest.approx(np.log(k))

    def test_gradient_matches_central_differences(self, rng):
        # small shapes keep the finite-difference loop cheap
        for _ in range(10):
            k = int(rng.integers(2, 6))
            f = int(rng.integers(2, 11))
            batch = int(rng.integers(1, 9))
            weights = rng.normal(scale=0.5, size=(k, f))
            feats = rng.normal(size=(batch, f))
            labels = rng.integers(0, k, size=batch)
            _, grad = loss_and_gradient(weights, feats, labels)
            fd = finite_difference_gradient(weights, feats, labels)
            denom = max(np.linalg.norm(grad), np.linalg.norm(fd), 1e-12)
            assert np.linalg.norm(grad - fd) / denom < 1e-5

    def test_saturated_correct_class_drives_loss_to_zero(self):
        weights = np.zeros((2, 3))
        weights[1] = [50.0, 50.0, 50.0]
        feats = np.array([[1.0, 1.0, 1.0]])
        loss, _ = loss_and_gradient(weights, feats, np.array([1]))
        assert loss < 1e-12


def _noiseless_dataset(n=1, seed=5):
    spec = SceneSpec(noise_std=0.0, seed=seed)
    return generate_dataset(spec, n, "train")


class TestTrain:
    def test_zero_epochs_gives_zero_weights(self):
        dataset = _noiseless_dataset()
        model, losses = train(dataset, TrainConfig(epochs=0), patch_radius=1)
        assert (model.weights == 0).all()
        assert losses == []

    def test_overfits_one_noiseless_image(self):
        dataset = _noiseless_dataset(n=1)
        config = TrainConfig(
            epochs=50, learning_rate=2.0, batch_size=256, pixel_sample_rate=1.0, seed=0
        )
        model, _ = train(dataset, config, patch_radius=0)
        sample = dataset.samples[0]
        pred = predict(model, sample.image)
        accuracy = (pred.data == sample.mask.data).mean()
        assert accuracy >= 0.99

    def test_deterministic_weights(self):
        dataset = _noiseless_dataset(n=3)
        config = TrainConfig(epochs=3, seed=42)
        model_a, losses_a = train(dataset, config, patch_radius=1)
        model_b, losses_b = train(dataset, config, patch_radius=1)
        assert np.array_equal(model_a.weights, model_b.weights)
        assert losses_a == losses_b

    def test_different_seed_changes_weights(self):
        dataset = _noiseless_dataset(n=3)
        model_a, _ = train(dataset, TrainConfig(epochs=2, seed=1), patch_radius=1)
        model_b, _ = train(dataset, TrainConfig(epochs=2, seed=2), patch_radius=1)
        assert not np.array_equal(model_a.weights, model_b.weights)

    def test_no_scored_pixels_raises(self):
        mask = LabelMask(np.full((16, 16), 255, dtype=np.uint8))
        image = Image(np.zeros((16, 16, 3), dtype=np.uint8))
        dataset = Dataset(3, (Sample("x", image, mask),))
        with pytest.raises(TrainingError):
            train(dataset, TrainConfig(epochs=1))

    def test_ignore_pixels_never_sampled(self):
        # half the mask is ignore; training must still converge on the rest
        data = np.zeros((16, 16), dtype=np.uint8)
        data[:8] = 255
        data[8:] = 1
        image = Image(np.full((16, 16, 3), 200, dtype=np.uint8))
        dataset = Dataset(3, (Sample("x", image, LabelMask(data)),))
        model, _ = train(
            dataset, TrainConfig(epochs=20, pixel_sample_rate=1.0), patch_radius=0
        )
        pred = predict(model, image)
        assert (pred.data == 1).all()

    def test_loss_decreases_on_default_scenes(self):
        dataset = generate_dataset(SceneSpec(seed=2), 10, "train")
        _, losses = train(dataset, TrainConfig(epochs=5, seed=0), patch_radius=1)
        tenth = max(1, len(losses) // 10)
        assert np.median(losses[-tenth:]) < np.median(losses[:tenth])


class TestPredict:
    def test_zero_weight_model_predicts_class_zero(self):
        dataset = _noiseless_dataset()
        model, _ = train(dataset, TrainConfig(epochs=0), patch_radius=1)
        pred = predict(model, dataset.samples[0].image)
        assert (pred.data == 0).all()

    def test_prediction_dimensions_match_input(self, rng):
        dataset = _noiseless_dataset()
        model, _ = train(dataset, TrainConfig(epochs=1), patch_radius=2)
        img = Image(rng.integers(0, 256, (31, 17, 3), dtype=np.uint8))
        pred = predict(model, img)
        assert pred.size == (31, 17)

    def test_saturated_model_reproduces_mask(self):
        dataset = _noiseless_dataset(n=2)
        config = TrainConfig(
            epochs=60, learning_rate=2.0, batch_size=256, pixel_sample_rate=1.0, seed=0
        )
        model, _ = train(dataset, config, patch_radius=0)
        for sample in dataset:
            pred = predict(model, sample.image)
            assert (pred.data == sample.mask.data).mean() >= 0.99


class TestModelFile:
    def test_round_trip_is_exact(self, tmp_path):
        dataset = _noiseless_dataset(n=2)
        model, _ = train(dataset, TrainConfig(epochs=2, seed=7), patch_radius=1)
        path = tmp_path / "model.json"
        save_model(model, path)
        loaded = load_model(path)
        assert loaded.num_classes == model.num_classes
        assert loaded.patch_radius == model.patch_radius
        assert np.array_equal(loaded.weights, model.weights)
        assert loaded.training_meta["seed"] == 7

    def test_identical_models_produce_identical_bytes(self, tmp_path):
        dataset = _noiseless_dataset(n=2)
        config = TrainConfig(epochs=2, seed=7)
        model_a, _ = train(dataset, config, patch_radius=1)
        model_b, _ = train(dataset, config, patch_radius=1)
        save_model(model_a, tmp_path / "a.json")
        save_model(model_b, tmp_path / "b.json")
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_rejects_other_files(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"format": "something-else"}')
        with pytest.raises(ConfigError):
            load_model(path)

    def test_config_validation(self):
        with pytest.raises(ConfigError):
            TrainConfig(epochs=-1)
        with pytest.raises(ConfigError):
            TrainConfig(pixel_sample_rate=0.0)
        with pytest.raises(ConfigError):
            TrainConfig(learning_rate=0.0)
