"""The three-input BoGP classifier and its training loop.

Architecture: the running and kicking embeddings each pass through a
128-unit dense layer with batch normalization, the 6-dim metadata vector
through a 16-unit dense layer; the three paths are concatenated and fed to
a 128-unit and a 64-unit dense layer separated by batch normalization,
ending in a softmax head (three classes) or a single sigmoid output
interpreted as P(right) (two classes).

Everything is plain numpy with hand-written backprop: training is
deterministic given the seeds, gradients are finite-difference checked in
the test suite, and checkpoints reload bit-exactly.
"""

from __future__ import annotations

import io
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .dataset import METADATA_DIM

PROB_EPS = 1e-7
BN_EPS = 1e-5
BN_MOMENTUM = 0.1

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class ModelConfig:
    r_run: int
    r_kick: int
    n_classes: int = 3
    meta_dim: int = METADATA_DIM
    embed_units: int = 128
    meta_units: int = 16
    trunk_units: tuple[int, int] = (128, 64)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_classes not in (2, 3):
            raise ValueError("n_classes must be 2 or 3")
        for units in (self.embed_units, self.meta_units, *self.trunk_units):
            if units <= 0:
                raise ValueError("unit counts must be positive")

    @property
    def head(self) -> str:
        return "sigmoid" if self.n_classes == 2 else "softmax"

    @property
    def head_dim(self) -> int:
        return 1 if self.n_classes == 2 else self.n_classes


@dataclass(frozen=True)
class TrainingConfig:
    loss: str = "categorical_ce"
    class_weights: tuple[float, ...] = ()
    epochs: int = 100
    batch_size: int = 32
    learning_rate: float = 1e-3
    optimizer_name: str = "adam"
    patience: int = 10
    seed: int = 0

    def __post_init__(self) -> None:
        if self.loss not in ("categorical_ce", "binary_ce"):
            raise ValueError("loss must be categorical_ce or binary_ce")
        if any(not np.isfinite(w) or w <= 0 for w in self.class_weights):
            raise ValueError("class weights must be finite and > 0")
        if self.optimizer_name != "adam":
            raise ValueError("only the adam optimizer is implemented")


def compute_class_weights(counts: list[int] | tuple[int, ...]) -> np.ndarray:
    """Inverse-frequency weights w_i = N_total / (C * n_i)."""
    counts_arr = np.asarray(counts, dtype=np.float64)
    if (counts_arr <= 0).any():
        raise ValueError("every class needs at least one sample")
    return counts_arr.sum() / (counts_arr.size * counts_arr)


def _clip_probs(p: np.ndarray) -> np.ndarray:
    return np.clip(p, PROB_EPS, 1.0 - PROB_EPS)


def categorical_cross_entropy(
    y: np.ndarray, p: np.ndarray, class_weights: Optional[np.ndarray] = None
) -> float:
    """Mean over samples of -log p at the true class, scaled by its weight.

    `y` is one-hot, shape (C,) or (B, C); `p` matches. Probabilities are
    clipped to [1e-7, 1 - 1e-7] before the log.
    """
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    p = np.atleast_2d(np.asarray(p, dtype=np.float64))
    if y.shape != p.shape:
        raise ValueError(f"shape mismatch: y {y.shape} vs p {p.shape}")
    if not np.allclose(y.sum(axis=1), 1.0) or not np.isin(y, (0.0, 1.0)).all():
        raise ValueError("y must be one-hot")
    per_sample = -(y * np.log(_clip_probs(p))).sum(axis=1)
    if class_weights is not None:
        per_sample = per_sample * np.asarray(class_weights)[y.argmax(axis=1)]
    return float(per_sample.mean())


def binary_cross_entropy(
    y: np.ndarray, p: np.ndarray, class_weights: Optional[np.ndarray] = None
) -> float:
    """Mean over the N scalar outputs of the weighted binary cross-entropy.

    Each term -[y log p + (1-y) log(1-p)] is scaled by the weight of its
    true class (index 0 for y=0, index 1 for y=1).
    """
    y = np.atleast_1d(np.asarray(y, dtype=np.float64)).ravel()
    p = np.atleast_1d(np.asarray(p, dtype=np.float64)).ravel()
    if y.shape != p.shape:
        raise ValueError(f"shape mismatch: y {y.shape} vs p {p.shape}")
    if not np.isin(y, (0.0, 1.0)).all():
        raise ValueError("y must be 0/1 per scalar")
    pc = _clip_probs(p)
    terms = -(y * np.log(pc) + (1.0 - y) * np.log(1.0 - pc))
    if class_weights is not None:
        w = np.asarray(class_weights, dtype=np.float64)
        terms = terms * w[y.astype(np.intp)]
    return float(terms.mean())


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def categorical_ce_with_logits(
    logits: np.ndarray, y: np.ndarray, class_weights: Optional[np.ndarray] = None
) -> tuple[float, np.ndarray]:
    """Weighted categorical cross-entropy and its gradient w.r.t. logits."""
    logits = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    p = softmax(logits)
    loss = categorical_cross_entropy(y, p, class_weights)
    batch = logits.shape[0]
    if class_weights is None:
        w = np.ones(batch)
    else:
        w = np.asarray(class_weights)[y.argmax(axis=1)]
    grad = w[:, None] * (p - y) / batch
    return loss, grad


def binary_ce_with_logits(
    logits: np.ndarray, y: np.ndarray, class_weights: Optional[np.ndarray] = None
) -> tuple[float, np.ndarray]:
    """Weighted binary cross-entropy and its gradient w.r.t. logits."""
    flat = np.atleast_1d(np.asarray(logits, dtype=np.float64)).ravel()
    y_flat = np.atleast_1d(np.asarray(y, dtype=np.float64)).ravel()
    p = sigmoid(flat)
    loss = binary_cross_entropy(y_flat, p, class_weights)
    if class_weights is None:
        w = np.ones_like(y_flat)
    else:
        w = np.asarray(class_weights, dtype=np.float64)[y_flat.astype(np.intp)]
    grad = (w * (p - y_flat) / y_flat.size).reshape(np.shape(logits))
    return loss, grad


def _dense_init(rng: np.random.Generator, fan_in: int, fan_out: int):
    # He initialization for the ReLU layers.
    w = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out))
    return w, np.zeros(fan_out)


class BoGPClassifier:
    """Three-input MLP; immutable once trained, safe for concurrent inference."""

    def __init__(self, config: ModelConfig):
        self.config = config
        rng = np.random.default_rng(config.seed)
        p: dict[str, np.ndarray] = {}
        p["run_w"], p["run_b"] = _dense_init(rng, config.r_run, config.embed_units)
        p["kick_w"], p["kick_b"] = _dense_init(rng, config.r_kick, config.embed_units)
        p["meta_w"], p["meta_b"] = _dense_init(rng, config.meta_dim, config.meta_units)
        concat = 2 * config.embed_units + config.meta_units
        p["t1_w"], p["t1_b"] = _dense_init(rng, concat, config.trunk_units[0])
        p["t2_w"], p["t2_b"] = _dense_init(
            rng, config.trunk_units[0], config.trunk_units[1]
        )
        p["head_w"], p["head_b"] = _dense_init(
            rng, config.trunk_units[1], config.head_dim
        )
        for bn in ("bn_run", "bn_kick", "bn_t1"):
            dim = config.embed_units if bn != "bn_t1" else config.trunk_units[0]
            p[f"{bn}_gamma"] = np.ones(dim)
            p[f"{bn}_beta"] = np.zeros(dim)
        self.params = p
        self.bn_state = {
            f"{bn}_{stat}": (
                np.zeros(config.embed_units if bn != "bn_t1" else config.trunk_units[0])
                if stat == "mean"
                else np.ones(
                    config.embed_units if bn != "bn_t1" else config.trunk_units[0]
                )
            )
            for bn in ("bn_run", "bn_kick", "bn_t1")
            for stat in ("mean", "var")
        }

    # -- forward -----------------------------------------------------------

    def _bn(self, name: str, z: np.ndarray, training: bool, cache: Optional[dict]):
        gamma = self.params[f"{name}_gamma"]
        beta = self.params[f"{name}_beta"]
        if training:
            mu = z.mean(axis=0)
            var = z.var(axis=0)
            istd = 1.0 / np.sqrt(var + BN_EPS)
            xhat = (z - mu) * istd
            self.bn_state[f"{name}_mean"] = (
                1.0 - BN_MOMENTUM
            ) * self.bn_state[f"{name}_mean"] + BN_MOMENTUM * mu
            self.bn_state[f"{name}_var"] = (
                1.0 - BN_MOMENTUM
            ) * self.bn_state[f"{name}_var"] + BN_MOMENTUM * var
        else:
            istd = 1.0 / np.sqrt(self.bn_state[f"{name}_var"] + BN_EPS)
            xhat = (z - self.bn_state[f"{name}_mean"]) * istd
        if cache is not None:
            cache[f"{name}_xhat"] = xhat
            cache[f"{name}_istd"] = istd
        return gamma * xhat + beta

    def _forward(
        self,
        run: np.ndarray,
        kick: np.ndarray,
        meta: np.ndarray,
        training: bool,
        cache: Optional[dict] = None,
    ) -> np.ndarray:
        p = self.params
        if cache is not None:
            cache.update(run=run, kick=kick, meta=meta)

        def dense_relu_bn(x, w, b, bn_name, key):
            z = x @ p[w] + p[b]
            zn = self._bn(bn_name, z, training, cache)
            a = np.maximum(zn, 0.0)
            if cache is not None:
                cache[f"{key}_zn"] = zn
            return a

        a_run = dense_relu_bn(run, "run_w", "run_b", "bn_run", "run")
        a_kick = dense_relu_bn(kick, "kick_w", "kick_b", "bn_kick", "kick")
        z_meta = meta @ p["meta_w"] + p["meta_b"]
        a_meta = np.maximum(z_meta, 0.0)
        concat = np.concatenate([a_run, a_kick, a_meta], axis=1)
        a_t1 = dense_relu_bn(concat, "t1_w", "t1_b", "bn_t1", "t1")
        z_t2 = a_t1 @ p["t2_w"] + p["t2_b"]
        a_t2 = np.maximum(z_t2, 0.0)
        logits = a_t2 @ p["head_w"] + p["head_b"]
        if cache is not None:
            cache.update(
                a_run=a_run,
                a_kick=a_kick,
                z_meta=z_meta,
                a_meta=a_meta,
                concat=concat,
                a_t1=a_t1,
                z_t2=z_t2,
                a_t2=a_t2,
            )
        return logits

    def forward(
        self,
        run: np.ndarray,
        kick: np.ndarray,
        meta: np.ndarray,
        training: bool = False,
    ) -> np.ndarray:
        """Probabilities for a batch (or single sample) of inputs.

        Softmax head: (B, C) rows summing to one. Sigmoid head: (B,)
        values in (0, 1) interpreted as P(right).
        """
        run, kick, meta, single = self._check_inputs(run, kick, meta)
        logits = self._forward(run, kick, meta, training)
        if self.config.head == "softmax":
            probs = softmax(logits)
        else:
            probs = sigmoid(logits).ravel()
        return probs[0] if single else probs

    def _check_inputs(self, run, kick, meta):
        run = np.asarray(run, dtype=np.float64)
        kick = np.asarray(kick, dtype=np.float64)
        meta = np.asarray(meta, dtype=np.float64)
        single = run.ndim == 1
        run, kick, meta = np.atleast_2d(run), np.atleast_2d(kick), np.atleast_2d(meta)
        expected = (self.config.r_run, self.config.r_kick, self.config.meta_dim)
        for name, arr, dim in zip(("run", "kick", "meta"), (run, kick, meta), expected):
            if arr.shape[1] != dim:
                raise ValueError(f"{name} input has dim {arr.shape[1]}, expected {dim}")
            if not np.isfinite(arr).all():
                raise ValueError(f"{name} input contains non-finite values")
        if not (run.shape[0] == kick.shape[0] == meta.shape[0]):
            raise ValueError("input batch sizes disagree")
        return run, kick, meta, single

    def predict(
        self, run: np.ndarray, kick: np.ndarray, meta: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray]:
        """(class indices, probability vectors) for a batch.

        Sigmoid head: class 1 iff P(right) > 0.5, an exact 0.5 resolves to
        class 0 (left); the probability vector is [1-p, p]. Softmax head:
        argmax, ties to the lowest class index.
        """
        run2, kick2, meta2, single = self._check_inputs(run, kick, meta)
        if self.config.head == "softmax":
            probs = softmax(self._forward(run2, kick2, meta2, training=False))
            classes = probs.argmax(axis=1)
        else:
            p_right = sigmoid(self._forward(run2, kick2, meta2, training=False)).ravel()
            classes = (p_right > 0.5).astype(np.intp)
            probs = np.stack([1.0 - p_right, p_right], axis=1)
        if single:
            return classes[0], probs[0]
        return classes, probs

    # -- backward ----------------------------------------------------------

    @staticmethod
    def _bn_backward(dxhat, xhat, istd):
        # Gradient through batch statistics (biased variance).
        batch = dxhat.shape[0]
        return (
            istd
            / batch
            * (batch * dxhat - dxhat.sum(axis=0) - xhat * (dxhat * xhat).sum(axis=0))
        )

    def loss_and_grads(
        self,
        run: np.ndarray,
        kick: np.ndarray,
        meta: np.ndarray,
        labels: np.ndarray,
        class_weights: Optional[np.ndarray],
    ) -> tuple[float, dict[str, np.ndarray]]:
        """Training-mode weighted loss and analytic parameter gradients."""
        p = self.params
        cache: dict = {}
        logits = self._forward(run, kick, meta, training=True, cache=cache)

        if self.config.head == "softmax":
            y = np.zeros((labels.size, self.config.n_classes))
            y[np.arange(labels.size), labels] = 1.0
            loss, dlogits = categorical_ce_with_logits(logits, y, class_weights)
        else:
            loss, dlogits = binary_ce_with_logits(
                logits, labels.astype(np.float64), class_weights
            )
            dlogits = dlogits.reshape(logits.shape)

        grads: dict[str, np.ndarray] = {}

        def dense_backward(dz, x, w_key, b_key):
            grads[w_key] = x.T @ dz
            grads[b_key] = dz.sum(axis=0)
            return dz @ p[w_key].T

        da_t2 = dense_backward(dlogits, cache["a_t2"], "head_w", "head_b")
        dz_t2 = da_t2 * (cache["z_t2"] > 0)
        da_t1 = dense_backward(dz_t2, cache["a_t1"], "t2_w", "t2_b")

        dzn_t1 = da_t1 * (cache["t1_zn"] > 0)
        dxhat = dzn_t1 * p["bn_t1_gamma"]
        dz_bn = self._bn_backward(dxhat, cache["bn_t1_xhat"], cache["bn_t1_istd"])
        grads["bn_t1_gamma"] = (dzn_t1 * cache["bn_t1_xhat"]).sum(axis=0)
        grads["bn_t1_beta"] = dzn_t1.sum(axis=0)
        dconcat = dense_backward(dz_bn, cache["concat"], "t1_w", "t1_b")

        eu = self.config.embed_units
        d_run, d_kick, d_meta = (
            dconcat[:, :eu],
            dconcat[:, eu : 2 * eu],
            dconcat[:, 2 * eu :],
        )

        for key, dpath, bn_name, w_key, b_key, x in (
            ("run", d_run, "bn_run", "run_w", "run_b", cache["run"]),
            ("kick", d_kick, "bn_kick", "kick_w", "kick_b", cache["kick"]),
        ):
            dzn = dpath * (cache[f"{key}_zn"] > 0)
            dxhat = dzn * p[f"{bn_name}_gamma"]
            dz = self._bn_backward(
                dxhat, cache[f"{bn_name}_xhat"], cache[f"{bn_name}_istd"]
            )
            grads[f"{bn_name}_gamma"] = (dzn * cache[f"{bn_name}_xhat"]).sum(axis=0)
            grads[f"{bn_name}_beta"] = dzn.sum(axis=0)
            dense_backward(dz, x, w_key, b_key)

        dz_meta = d_meta * (cache["z_meta"] > 0)
        dense_backward(dz_meta, cache["meta"], "meta_w", "meta_b")
        return loss, grads

    # -- persistence ---------------------------------------------------------

    def save(self, path: str | Path) -> None:
        """Versioned checkpoint: config plus every parameter and BN stat."""
        meta = json.dumps(
            {"version": CHECKPOINT_VERSION, "config": asdict(self.config)},
            sort_keys=True,
        )
        arrays = {f"param_{k}": v for k, v in self.params.items()}
        arrays.update({f"bn_{k}": v for k, v in self.bn_state.items()})
        arrays["checkpoint_meta"] = np.frombuffer(meta.encode("utf-8"), dtype=np.uint8)
        buf = io.BytesIO()
        np.savez(buf, **arrays)
        Path(path).write_bytes(buf.getvalue())

    @classmethod
    def load(cls, path: str | Path) -> "BoGPClassifier":
        with np.load(path) as data:
            meta = json.loads(bytes(data["checkpoint_meta"]).decode("utf-8"))
            if meta.get("version") != CHECKPOINT_VERSION:
                raise ValueError(f"unsupported checkpoint version {meta.get('version')}")
            cfg_dict = meta["config"]
            cfg_dict["trunk_units"] = tuple(cfg_dict["trunk_units"])
            model = cls(ModelConfig(**cfg_dict))
            for key in data.files:
                if key.startswith("param_"):
                    model.params[key[len("param_") :]] = data[key]
                elif key.startswith("bn_") and key != "checkpoint_meta":
                    model.bn_state[key[len("bn_") :]] = data[key]
        return model

    def copy_params(self) -> tuple[dict, dict]:
        return (
            {k: v.copy() for k, v in self.params.items()},
            {k: v.copy() for k, v in self.bn_state.items()},
        )

    def set_params(self, params: dict, bn_state: dict) -> None:
        self.params = {k: v.copy() for k, v in params.items()}
        self.bn_state = {k: v.copy() for k, v in bn_state.items()}


@dataclass
class TrainingLog:
    epoch_losses: list[float] = field(default_factory=list)
    val_losses: list[float] = field(default_factory=list)
    best_epoch: int = -1
    stopped_early: bool = False


def _labels_for_loss(labels: np.ndarray, n_classes: int) -> None:
    if labels.min() < 0 or labels.max() >= n_classes:
        raise ValueError("labels outside the configured class range")


def train(
    run: np.ndarray,
    kick: np.ndarray,
    meta: np.ndarray,
    labels: np.ndarray,
    model_cfg: ModelConfig,
    train_cfg: TrainingConfig,
    val: Optional[tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]] = None,
) -> tuple[BoGPClassifier, TrainingLog]:
    """Train with Adam; deterministic given (model_cfg.seed, train_cfg.seed).

    The per-epoch log entry is the weighted training loss over the full
    training set (one batch-norm pass over everything), so it depends only
    on the parameters. Early stopping watches the validation loss when a
    validation split is given, the training loss otherwise, and the best
    checkpoint is restored at the end.
    """
    labels = np.asarray(labels)
    classes = np.unique(labels)
    if classes.size < 2:
        raise ValueError("training split has fewer than two classes")
    _labels_for_loss(labels, model_cfg.n_classes)
    expected_loss = "binary_ce" if model_cfg.n_classes == 2 else "categorical_ce"
    if train_cfg.loss != expected_loss:
        raise ValueError(
            f"loss {train_cfg.loss} does not match the {model_cfg.head} head"
        )
    for c in range(model_cfg.n_classes):
        if (labels == c).sum() == 0:
            raise ValueError(f"class {c} has no training samples")

    weights = (
        np.asarray(train_cfg.class_weights, dtype=np.float64)
        if train_cfg.class_weights
        else None
    )
    if weights is not None and weights.size != model_cfg.n_classes:
        raise ValueError("class_weights length must equal n_classes")

    model = BoGPClassifier(model_cfg)
    rng = np.random.default_rng(train_cfg.seed)
    n = labels.size
    adam_m = {k: np.zeros_like(v) for k, v in model.params.items()}
    adam_v = {k: np.zeros_like(v) for k, v in model.params.items()}
    beta1, beta2, adam_eps = 0.9, 0.999, 1e-8
    step = 0

    def full_loss() -> float:
        loss, _ = model.loss_and_grads(run, kick, meta, labels, weights)
        return loss

    def validation_loss() -> float:
        v_run, v_kick, v_meta, v_labels = val
        probs = model.forward(v_run, v_kick, v_meta, training=False)
        if model_cfg.head == "softmax":
            y = np.zeros((v_labels.size, model_cfg.n_classes))
            y[np.arange(v_labels.size), v_labels] = 1.0
            return categorical_cross_entropy(y, probs, weights)
        return binary_cross_entropy(v_labels.astype(np.float64), probs, weights)

    log = TrainingLog()
    best = (np.inf, -1, model.copy_params())
    bad_epochs = 0
    for epoch in range(train_cfg.epochs):
        order = rng.permutation(n)
        for lo in range(0, n, train_cfg.batch_size):
            idx = order[lo : lo + train_cfg.batch_size]
            _, grads = model.loss_and_grads(
                run[idx], kick[idx], meta[idx], labels[idx], weights
            )
            step += 1
            for key, grad in grads.items():
                adam_m[key] = beta1 * adam_m[key] + (1 - beta1) * grad
                adam_v[key] = beta2 * adam_v[key] + (1 - beta2) * grad * grad
                m_hat = adam_m[key] / (1 - beta1**step)
                v_hat = adam_v[key] / (1 - beta2**step)
                model.params[key] = model.params[key] - train_cfg.learning_rate * (
                    m_hat / (np.sqrt(v_hat) + adam_eps)
                )
        epoch_loss = full_loss()
        log.epoch_losses.append(epoch_loss)
        monitored = epoch_loss
        if val is not None:
            val_loss = validation_loss()
            log.val_losses.append(val_loss)
            monitored = val_loss
        if monitored < best[0] - 1e-12:
            best = (monitored, epoch, model.copy_params())
            bad_epochs = 0
        else:
            bad_epochs += 1
            if train_cfg.patience > 0 and bad_epochs > train_cfg.patience:
                log.stopped_early = True
                break
    log.best_epoch = best[1]
    model.set_params(*best[2])
    return model, log


def forward(
    run_emb: np.ndarray, kick_emb: np.ndarray, meta: np.ndarray, model: BoGPClassifier
) -> np.ndarray:
    """Inference-mode probabilities (softmax vector or scalar P(right))."""
    return model.forward(run_emb, kick_emb, meta, training=False)


def predict(
    model: BoGPClassifier, run: np.ndarray, kick: np.ndarray, meta: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    return model.predict(run, kick, meta)
