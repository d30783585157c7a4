from __future__ import annotations

import math

import numpy as np
import pytest

from bogp.classifier import (
    BoGPClassifier,
    ModelConfig,
    TrainingConfig,
    binary_ce_with_logits,
    binary_cross_entropy,
    categorical_ce_with_logits,
    categorical_cross_entropy,
    compute_class_weights,
    train,
)
from bogp.synthetic import blob_table


def oracle_categorical(y_rows, p_rows, weights=None):
    """Brute-force weighted categorical CE, independent implementation."""
    eps = 1e-7
    total = 0.0
    for y, p in zip(y_rows, p_rows):
        true_idx = max(range(len(y)), key=lambda i: y[i])
        acc = 0.0
        for yi, pi in zip(y, p):
            acc -= yi * math.log(min(max(pi, eps), 1.0 - eps))
        if weights is not None:
            acc *= weights[true_idx]
        total += acc
    return total / len(y_rows)


def oracle_binary(y_vals, p_vals, weights=None):
    eps = 1e-7
    total = 0.0
    for y, p in zip(y_vals, p_vals):
        pc = min(max(p, eps), 1.0 - eps)
        term = -(y * math.log(pc) + (1.0 - y) * math.log(1.0 - pc))
        if weights is not None:
            term *= weights[int(y)]
        total += term
    return total / len(y_vals)


class TestLossHandValues:
    def test_perfect_categorical_prediction_is_near_zero(self):
        loss = categorical_cross_entropy([1, 0, 0], [1.0, 0.0, 0.0])
        assert loss <= 1.2e-7

    def test_minus_ln_half(self):
        loss = categorical_cross_entropy([1, 0, 0], [0.5, 0.3, 0.2])
        assert round(loss, 4) == 0.6931
        assert abs(loss - math.log(2)) < 1e-12

    def test_weighted_categorical(self):
        loss = categorical_cross_entropy([0, 0, 1], [0.2, 0.3, 0.5], np.array([1, 1, 2.0]))
        assert round(loss, 4) == 1.3863
        assert abs(loss - 2 * math.log(2)) < 1e-12

    def test_perfect_binary_prediction_near_zero(self):
        assert binary_cross_entropy([1.0], [1.0]) <= 1.2e-7

    def test_binary_minus_ln_half(self):
        loss = binary_cross_entropy([1.0], [0.5])
        assert round(loss, 4) == 0.6931

    def test_binary_batch_hand_value(self):
        loss = binary_cross_entropy([1.0, 0.0], [0.9, 0.9])
        assert round(loss, 4) == 1.2040
        assert abs(loss - (-math.log(0.9) - math.log(0.1)) / 2) < 1e-12

    def test_invalid_one_hot_rejected(self):
        with pytest.raises(ValueError):
            categorical_cross_entropy([0.5, 0.5, 0], [0.3, 0.3, 0.4])

    def test_binary_labels_must_be_binary(self):
        with pytest.raises(ValueError):
            binary_cross_entropy([0.25], [0.5])


class TestLossProperties:
    def test_matches_oracle_on_random_instances(self, rng):
        for _ in range(300):
            c = int(rng.integers(2, 5))
            b = int(rng.integers(1, 6))
            y = np.zeros((b, c))
            y[np.arange(b), rng.integers(0, c, size=b)] = 1.0
            p = rng.dirichlet(np.ones(c), size=b)
            w = rng.uniform(0.1, 3.0, size=c)
            ours = categorical_cross_entropy(y, p, w)
            ref = oracle_categorical(y.tolist(), p.tolist(), w.tolist())
            assert abs(ours - ref) <= 1e-9 * max(1.0, abs(ref))

            n = int(rng.integers(1, 9))
            yb = rng.integers(0, 2, size=n).astype(float)
            pb = rng.uniform(0.001, 0.999, size=n)
            wb = rng.uniform(0.1, 3.0, size=2)
            ours_b = binary_cross_entropy(yb, pb, wb)
            ref_b = oracle_binary(yb.tolist(), pb.tolist(), wb.tolist())
            assert abs(ours_b - ref_b) <= 1e-9 * max(1.0, abs(ref_b))

    def test_weight_linearity(self, rng):
        y = np.zeros((5, 3))
        y[np.arange(5), rng.integers(0, 3, size=5)] = 1.0
        p = rng.dirichlet(np.ones(3), size=5)
        base = categorical_cross_entropy(y, p)
        scaled = categorical_cross_entropy(y, p, np.full(3, 2.5))
        assert abs(scaled - 2.5 * base) < 1e-12

    def test_class_permutation_equivariance(self, rng):
        y = np.zeros((6, 3))
        y[np.arange(6), rng.integers(0, 3, size=6)] = 1.0
        p = rng.dirichlet(np.ones(3), size=6)
        w = np.array([0.7, 1.0, 1.9])
        perm = np.array([2, 0, 1])
        a = categorical_cross_entropy(y, p, w)
        b = categorical_cross_entropy(y[:, perm], p[:, perm], w[perm])
        assert abs(a - b) < 1e-12

    def test_binary_class_swap_equivariance(self, rng):
        y = rng.integers(0, 2, size=8).astype(float)
        p = rng.uniform(0.01, 0.99, size=8)
        w = np.array([0.8, 1.7])
        a = binary_cross_entropy(y, p, w)
        b = binary_cross_entropy(1.0 - y, 1.0 - p, w[::-1].copy())
        assert abs(a - b) < 1e-12


class TestLossGradients:
    def test_categorical_gradient_matches_finite_differences(self, rng):
        h = 1e-4
        for _ in range(60):
            c = int(rng.integers(2, 5))
            b = int(rng.integers(1, 5))
            logits = rng.normal(size=(b, c))
            y = np.zeros((b, c))
            y[np.arange(b), rng.integers(0, c, size=b)] = 1.0
            w = rng.uniform(0.2, 3.0, size=c)
            _, grad = categorical_ce_with_logits(logits, y, w)
            for i in range(b):
                for j in range(c):
                    up, down = logits.copy(), logits.copy()
                    up[i, j] += h
                    down[i, j] -= h
                    fd = (
                        categorical_ce_with_logits(up, y, w)[0]
                        - categorical_ce_with_logits(down, y, w)[0]
                    ) / (2 * h)
                    denom = max(abs(fd), abs(grad[i, j]), 1e-8)
                    assert abs(fd - grad[i, j]) / denom < 1e-3

    def test_binary_gradient_matches_finite_differences(self, rng):
        h = 1e-4
        for _ in range(60):
            n = int(rng.integers(1, 7))
            logits = rng.normal(size=n)
            y = rng.integers(0, 2, size=n).astype(float)
            w = rng.uniform(0.2, 3.0, size=2)
            _, grad = binary_ce_with_logits(logits, y, w)
            for i in range(n):
                up, down = logits.copy(), logits.copy()
                up[i] += h
                down[i] -= h
                fd = (
                    binary_ce_with_logits(up, y, w)[0]
                    - binary_ce_with_logits(down, y, w)[0]
                ) / (2 * h)
                denom = max(abs(fd), abs(grad[i]), 1e-8)
                assert abs(fd - grad[i]) / denom < 1e-3


class TestClassWeights:
    def test_paper_counts(self):
        w = compute_class_weights([187, 181, 50])
        assert abs(w[0] - 0.745) <= 0.001
        assert abs(w[1] - 0.770) <= 0.001
        assert abs(w[2] - 2.787) <= 0.001

    def test_balanced_counts_give_unit_weights(self):
        assert np.allclose(compute_class_weights([70, 70, 70]), 1.0)

    def test_two_balanced_classes(self):
        assert compute_class_weights([100, 100]).tolist() == [1.0, 1.0]

    def test_zero_count_rejected(self):
        with pytest.raises(ValueError):
            compute_class_weights([10, 0])


def tiny_config(n_classes=3, seed=0):
    return ModelConfig(
        r_run=6,
        r_kick=5,
        n_classes=n_classes,
        embed_units=8,
        meta_units=4,
        trunk_units=(8, 6),
        seed=seed,
    )


class TestForward:
    def test_softmax_rows_sum_to_one(self, rng):
        model = BoGPClassifier(tiny_config())
        probs = model.forward(
            rng.normal(size=(10, 6)), rng.normal(size=(10, 5)), rng.normal(size=(10, 6))
        )
        assert np.abs(probs.sum(axis=1) - 1.0).max() < 1e-6

    def test_zero_inputs_finite_output(self):
        model = BoGPClassifier(tiny_config())
        probs = model.forward(np.zeros(6), np.zeros(5), np.zeros(6))
        assert np.isfinite(probs).all()

    def test_sigmoid_head_strictly_inside_unit_interval(self, rng):
        model = BoGPClassifier(tiny_config(n_classes=2))
        p = model.forward(
            rng.normal(size=(8, 6)), rng.normal(size=(8, 5)), rng.normal(size=(8, 6))
        )
        assert ((p > 0.0) & (p < 1.0)).all()

    def test_scaling_an_embedding_changes_output(self, rng):
        model = BoGPClassifier(tiny_config(seed=4))
        run = rng.normal(size=(1, 6))
        kick = rng.normal(size=(1, 5))
        meta = rng.normal(size=(1, 6))
        a = model.forward(run, kick, meta)
        b = model.forward(2 * run, kick, meta)
        c = model.forward(run, 2 * kick, meta)
        assert not np.allclose(a, b)
        assert not np.allclose(a, c)

    def test_metadata_path_is_wired(self, rng):
        model = BoGPClassifier(tiny_config(seed=4))
        run = rng.normal(size=(4, 6))
        kick = rng.normal(size=(4, 5))
        meta = rng.uniform(0.5, 1.5, size=(4, 6))
        with_meta = model.forward(run, kick, meta)
        without = model.forward(run, kick, np.zeros_like(meta))
        assert not np.allclose(with_meta, without)

    def test_dim_mismatch_rejected(self, rng):
        model = BoGPClassifier(tiny_config())
        with pytest.raises(ValueError):
            model.forward(rng.normal(size=(1, 7)), rng.normal(size=(1, 5)), rng.normal(size=(1, 6)))

    def test_non_finite_input_rejected(self):
        model = BoGPClassifier(tiny_config())
        bad = np.full((1, 6), np.nan)
        with pytest.raises(ValueError):
            model.forward(bad, np.zeros((1, 5)), np.zeros((1, 6)))


class TestFullModelGradients:
    @pytest.mark.parametrize("n_classes", [2, 3])
    def test_backprop_matches_finite_differences(self, n_classes, rng):
        model = BoGPClassifier(tiny_config(n_classes=n_classes, seed=11))
        b = 5
        run = rng.normal(size=(b, 6))
        kick = rng.normal(size=(b, 5))
        meta = rng.normal(size=(b, 6))
        labels = rng.integers(0, n_classes, size=b)
        weights = rng.uniform(0.5, 2.0, size=n_classes)
        _, grads = model.loss_and_grads(run, kick, meta, labels, weights)
        h = 1e-5
        for key, grad in grads.items():
            param = model.params[key]
            flat_indices = rng.choice(param.size, size=min(param.size, 4), replace=False)
            for flat in flat_indices:
                idx = np.unravel_index(flat, param.shape)
                orig = param[idx]
                param[idx] = orig + h
                up, _ = model.loss_and_grads(run, kick, meta, labels, weights)
                param[idx] = orig - h
                down, _ = model.loss_and_grads(run, kick, meta, labels, weights)
                param[idx] = orig
                fd = (up - down) / (2 * h)
                denom = max(abs(fd), abs(grad[idx]), 1e-7)
                assert abs(fd - grad[idx]) / denom < 1e-3, key


class TestTraining:
    def _blob_data(self, n=60, seed=0):
        table = blob_table(n=n, seed=seed)
        return table.run, table.kick, table.meta, table.labels

    def test_separable_blobs_reach_99_percent(self):
        run, kick, meta, labels = self._blob_data()
        cfg = ModelConfig(r_run=16, r_kick=16, n_classes=2, seed=1)
        tc = TrainingConfig(loss="binary_ce", epochs=50, patience=0, seed=1)
        model, _ = train(run, kick, meta, labels, cfg, tc)
        pred, _ = model.predict(run, kick, meta)
        assert (pred == labels).mean() >= 0.99

    def test_same_seed_identical_final_loss(self):
        run, kick, meta, labels = self._blob_data(n=40, seed=3)
        cfg = ModelConfig(r_run=16, r_kick=16, n_classes=2, seed=5)
        tc = TrainingConfig(loss="binary_ce", epochs=12, seed=5)
        _, log_a = train(run, kick, meta, labels, cfg, tc)
        _, log_b = train(run, kick, meta, labels, cfg, tc)
        assert abs(log_a.epoch_losses[-1] - log_b.epoch_losses[-1]) < 1e-6
        assert log_a.epoch_losses == log_b.epoch_losses

    def test_zero_learning_rate_keeps_loss_constant(self):
        run, kick, meta, labels = self._blob_data(n=40, seed=3)
        cfg = ModelConfig(r_run=16, r_kick=16, n_classes=2, seed=5)
        tc = TrainingConfig(loss="binary_ce", epochs=6, learning_rate=0.0, patience=0, seed=5)
        _, log = train(run, kick, meta, labels, cfg, tc)
        assert len(log.epoch_losses) == 6
        assert max(log.epoch_losses) - min(log.epoch_losses) < 1e-12

    def test_empty_class_rejected(self):
        run, kick, meta, labels = self._blob_data(n=20, seed=0)
        cfg = ModelConfig(r_run=16, r_kick=16, n_classes=2, seed=0)
        tc = TrainingConfig(loss="binary_ce", epochs=2)
        with pytest.raises(ValueError):
            train(run, kick, meta, np.zeros_like(labels), cfg, tc)

    def test_loss_head_mismatch_rejected(self):
        run, kick, meta, labels = self._blob_data(n=20, seed=0)
        cfg = ModelConfig(r_run=16, r_kick=16, n_classes=2, seed=0)
        with pytest.raises(ValueError):
            train(run, kick, meta, labels, cfg, TrainingConfig(loss="categorical_ce"))

    def test_validation_early_stopping_restores_best(self):
        run, kick, meta, labels = self._blob_data(n=60, seed=2)
        cfg = ModelConfig(r_run=16, r_kick=16, n_classes=2, seed=2)
        tc = TrainingConfig(loss="binary_ce", epochs=40, patience=3, seed=2)
        val = (run[:10], kick[:10], meta[:10], labels[:10])
        model, log = train(run[10:], kick[10:], meta[10:], labels[10:], cfg, tc, val=val)
        assert log.best_epoch >= 0
        assert len(log.val_losses) == len(log.epoch_losses)


class TestPredict:
    def test_argmax_of_probabilities(self):
        model = BoGPClassifier(tiny_config())
        probs = np.array([0.2, 0.1, 0.7])
        assert int(probs.argmax()) == 2

    def test_sigmoid_exact_half_goes_left(self, rng):
        model = BoGPClassifier(tiny_config(n_classes=2))
        # Force the head to emit exactly logit 0 -> p = 0.5.
        model.params["head_w"][:] = 0.0
        model.params["head_b"][:] = 0.0
        cls, probs = model.predict(
            rng.normal(size=(1, 6)), rng.normal(size=(1, 5)), rng.normal(size=(1, 6))
        )
        assert probs[0].tolist() == [0.5, 0.5]
        assert cls[0] == 0

    def test_argmax_invariant_under_monotone_transform(self, rng):
        from bogp.classifier import softmax

        logits = rng.normal(size=(20, 3))
        base = softmax(logits).argmax(axis=1)
        for transform in (lambda z: 3.0 * z + 1.0, np.exp, lambda z: z**3 + z):
            assert (softmax(transform(logits)).argmax(axis=1) == base).all()

    def test_predict_matches_forward_argmax(self, rng):
        model = BoGPClassifier(tiny_config(seed=8))
        run = rng.normal(size=(7, 6))
        kick = rng.normal(size=(7, 5))
        meta = rng.normal(size=(7, 6))
        cls, probs = model.predict(run, kick, meta)
        assert (cls == probs.argmax(axis=1)).all()


class TestCheckpoint:
    def test_save_load_reproduces_predictions_bit_exactly(self, tmp_path, rng):
        run, kick, meta = (
            rng.normal(size=(9, 16)),
            rng.normal(size=(9, 16)),
            rng.normal(size=(9, 6)),
        )
        labels = rng.integers(0, 2, size=9)
        cfg = ModelConfig(r_run=16, r_kick=16, n_classes=2, seed=3)
        tc = TrainingConfig(loss="binary_ce", epochs=3, seed=3)
        model, _ = train(run, kick, meta, labels, cfg, tc)
        path = tmp_path / "model.ckpt"
        model.save(path)
        loaded = BoGPClassifier.load(path)
        a = model.forward(run, kick, meta)
        b = loaded.forward(run, kick, meta)
        assert a.tobytes() == b.tobytes()
        assert loaded.config == model.config

    def test_bad_version_rejected(self, tmp_path):
        model = BoGPClassifier(tiny_config())
        path = tmp_path / "model.ckpt"
        model.save(path)
        import io
        import json

        import numpy as np_mod

        with np_mod.load(path) as data:
            arrays = {k: data[k] for k in data.files}
        meta = json.loads(bytes(arrays["checkpoint_meta"]).decode())
        meta["version"] = 999
        arrays["checkpoint_meta"] = np_mod.frombuffer(
            json.dumps(meta).encode(), dtype=np_mod.uint8
        )
        buf = io.BytesIO()
        np_mod.savez(buf, **arrays)
        path.write_bytes(buf.getvalue())
        with pytest.raises(ValueError):
            BoGPClassifier.load(path)
