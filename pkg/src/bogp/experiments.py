"""Cross-validation harness, metrics, confusion matrices, and reports.

The evaluation protocol is repeated stratified k-fold cross-validation
(defaults: 5 repetitions of 10 folds). Fold assignment derives only from
(seed, repetition), so paired runs — e.g. the metadata ablation — see
identical splits. Reports carry per-fold metrics, mean/std aggregates, and
the aggregate row-normalized confusion matrix; their canonical JSON form
is byte-stable for a fixed seed (wall-clock runtime is kept out of it).
"""

from __future__ import annotations

import dataclasses
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .backbones import DISPLAY_NAMES, frames_per_window
from .classifier import (
    BoGPClassifier,
    ModelConfig,
    TrainingConfig,
    compute_class_weights,
    train,
)
from .dataset import EXCLUDED, ClipRecord, LabelSpace, encode_metadata, project_label
from .embeddings import EmbeddingCache
from .preprocess import KICKING, RUNNING

METRIC_NAMES = ("accuracy", "precision", "recall", "f1")


class LeakageError(RuntimeError):
    """A sample would appear in its own training split."""


class MissingEmbeddingsError(RuntimeError):
    """Cache entries required by the experiment are absent."""

    def __init__(self, missing: list[tuple[str, str]]):
        self.missing = missing
        listing = ", ".join(f"{cid}/{stage}" for cid, stage in missing[:10])
        more = "" if len(missing) <= 10 else f" (+{len(missing) - 10} more)"
        super().__init__(f"missing cached embeddings: {listing}{more}")


@dataclass(frozen=True)
class ExperimentConfig:
    backbone: str
    pooling: str
    label_mode: str = "three_class"
    repeats: int = 5
    k: int = 10
    seed: int = 0
    metadata_enabled: bool = True

    def __post_init__(self) -> None:
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        if self.k < 2:
            raise ValueError("k must be >= 2")

    @property
    def label_space(self) -> LabelSpace:
        return (
            LabelSpace.three_class()
            if self.label_mode == "three_class"
            else LabelSpace.two_class()
        )


@dataclass(frozen=True)
class MetricsBundle:
    """Accuracy plus macro-averaged precision/recall/F1 (0/0 counts as 0)."""

    accuracy: float
    precision: float
    recall: float
    f1: float
    per_class: dict[str, dict[str, float]]

    def as_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "per_class": self.per_class,
        }


@dataclass
class ConfusionMatrix:
    """Rows = true class, columns = predicted class."""

    counts: np.ndarray
    classes: tuple[str, ...]

    @property
    def row_normalized(self) -> np.ndarray:
        sums = self.counts.sum(axis=1, keepdims=True)
        out = np.zeros_like(self.counts, dtype=np.float64)
        np.divide(self.counts, sums, out=out, where=sums > 0)
        return out

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def accuracy(self) -> float:
        return int(np.trace(self.counts)) / self.total


def compute_metrics(
    y_true: Sequence[int], y_pred: Sequence[int], space: LabelSpace
) -> MetricsBundle:
    y_true = np.asarray(y_true, dtype=np.intp)
    y_pred = np.asarray(y_pred, dtype=np.intp)
    if y_true.size == 0:
        raise ValueError("cannot compute metrics on empty input")
    if y_true.shape != y_pred.shape:
        raise ValueError("y_true and y_pred lengths differ")
    n = space.n_classes
    if y_true.min() < 0 or y_true.max() >= n or y_pred.min() < 0 or y_pred.max() >= n:
        raise ValueError("labels outside the label space")

    correct = int((y_true == y_pred).sum())
    accuracy = correct / y_true.size
    per_class: dict[str, dict[str, float]] = {}
    precisions, recalls, f1s = [], [], []
    for c, name in enumerate(space.classes):
        tp = int(((y_true == c) & (y_pred == c)).sum())
        fp = int(((y_true != c) & (y_pred == c)).sum())
        fn = int(((y_true == c) & (y_pred != c)).sum())
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[name] = {"precision": precision, "recall": recall, "f1": f1}
        precisions.append(precision)
        recalls.append(recall)
        f1s.append(f1)
    return MetricsBundle(
        accuracy=accuracy,
        precision=float(np.mean(precisions)),
        recall=float(np.mean(recalls)),
        f1=float(np.mean(f1s)),
        per_class=per_class,
    )


def confusion(
    y_true: Sequence[int], y_pred: Sequence[int], space: LabelSpace
) -> ConfusionMatrix:
    y_true = np.asarray(y_true, dtype=np.intp)
    y_pred = np.asarray(y_pred, dtype=np.intp)
    n = space.n_classes
    counts = np.zeros((n, n), dtype=np.int64)
    np.add.at(counts, (y_true, y_pred), 1)
    return ConfusionMatrix(counts=counts, classes=space.classes)


@dataclass
class SampleTable:
    """In-memory training table: one row per kept, labeled clip."""

    ids: list[str]
    run: np.ndarray
    kick: np.ndarray
    meta: np.ndarray
    labels: np.ndarray
    space: LabelSpace

    def __post_init__(self) -> None:
        n = len(self.ids)
        for name in ("run", "kick", "meta", "labels"):
            if getattr(self, name).shape[0] != n:
                raise ValueError(f"{name} row count does not match ids")

    @property
    def n(self) -> int:
        return len(self.ids)

    def class_counts(self) -> list[int]:
        return [int((self.labels == c).sum()) for c in range(self.space.n_classes)]


def table_from_cache(
    records: Sequence[ClipRecord],
    cache: EmbeddingCache,
    backbone_name: str,
    pooling: str,
    space: LabelSpace,
) -> SampleTable:
    """Assemble the experiment table from kept clips and cached embeddings.

    Two-class mode silently drops center-labeled clips. Every missing
    cache entry is enumerated up front; nothing is trained on a partial
    corpus.
    """
    usable = []
    for rec in sorted(records, key=lambda r: r.clip_id):
        if rec.exclusion is not None or rec.annotation is None:
            continue
        label = project_label(rec.annotation, space)
        if label == EXCLUDED:
            continue
        usable.append((rec, label))
    if not usable:
        raise ValueError("no usable annotated clips for this label space")

    missing: list[tuple[str, str]] = []
    rows_run, rows_kick, rows_meta, labels, ids = [], [], [], [], []
    for rec, label in usable:
        run_e = cache.get(rec.clip_id, RUNNING, backbone_name, pooling)
        kick_e = cache.get(rec.clip_id, KICKING, backbone_name, pooling)
        if run_e is None:
            missing.append((rec.clip_id, RUNNING))
        if kick_e is None:
            missing.append((rec.clip_id, KICKING))
        if run_e is None or kick_e is None:
            continue
        ids.append(rec.clip_id)
        rows_run.append(run_e.vector.astype(np.float64))
        rows_kick.append(kick_e.vector.astype(np.float64))
        rows_meta.append(encode_metadata(rec.annotation))
        labels.append(label)
    if missing:
        raise MissingEmbeddingsError(missing)
    return SampleTable(
        ids=ids,
        run=np.stack(rows_run),
        kick=np.stack(rows_kick),
        meta=np.stack(rows_meta),
        labels=np.asarray(labels, dtype=np.intp),
        space=space,
    )


@dataclass
class FoldResult:
    repetition: int
    fold: int
    test_ids: list[str]
    metrics: MetricsBundle
    confusion_counts: np.ndarray


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    folds: list[FoldResult]
    mean: dict[str, float]
    std: dict[str, float]
    confusion: ConfusionMatrix
    n_samples: int
    runtime_seconds: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def tag(self) -> str:
        meta = "" if self.config.metadata_enabled else "_nometa"
        return (
            f"{self.config.backbone}_{self.config.pooling}_"
            f"{self.config.label_space.n_classes}cls{meta}"
        )

    def tested_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for fr in self.folds:
            for cid in fr.test_ids:
                counts[cid] = counts.get(cid, 0) + 1
        return counts

    def canonical_dict(self) -> dict:
        """Deterministic report content; excludes wall-clock runtime."""
        return {
            "config": dataclasses.asdict(self.config),
            "classes": list(self.config.label_space.classes),
            "n_samples": int(self.n_samples),
            "folds": [
                {
                    "repetition": fr.repetition,
                    "fold": fr.fold,
                    "test_ids": fr.test_ids,
                    "metrics": fr.metrics.as_dict(),
                    "confusion": fr.confusion_counts.tolist(),
                }
                for fr in self.folds
            ],
            "aggregate": {"mean": self.mean, "std": self.std},
            "confusion_counts": self.confusion.counts.tolist(),
            "confusion_row_normalized": self.confusion.row_normalized.tolist(),
            "extra": self.extra,
        }

    def canonical_json(self) -> str:
        return json.dumps(self.canonical_dict(), sort_keys=True)


def _derived_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def _fold_partition_check(folds: list[list[str]], ids: list[str]) -> None:
    seen: set[str] = set()
    for fold in folds:
        fold_set = set(fold)
        if fold_set & seen:
            raise LeakageError(f"fold overlap on {sorted(fold_set & seen)[:5]}")
        seen |= fold_set
    if seen != set(ids):
        raise LeakageError("folds do not cover the corpus exactly")


def run_cv(
    table: SampleTable,
    cfg: ExperimentConfig,
    model_cfg: Optional[ModelConfig] = None,
    train_cfg: Optional[TrainingConfig] = None,
) -> ExperimentReport:
    """Repeated stratified k-fold cross-validation.

    For every repetition and fold: train on the other k-1 folds, evaluate
    on the held-out fold. Duplicate sample ids and any fold overlap raise
    :class:`LeakageError` before any training starts. Class weights are
    recomputed per fold from the training split. Same seed, same table:
    byte-identical canonical report.
    """
    if len(set(table.ids)) != len(table.ids):
        dupes = sorted({i for i in table.ids if table.ids.count(i) > 1})
        raise LeakageError(f"duplicate sample ids: {dupes[:5]}")
    if table.space.mode != cfg.label_space.mode:
        raise ValueError("table label space does not match experiment config")

    n_classes = table.space.n_classes
    if model_cfg is None:
        model_cfg = ModelConfig(
            r_run=table.run.shape[1], r_kick=table.kick.shape[1], n_classes=n_classes
        )
    if train_cfg is None:
        train_cfg = TrainingConfig(
            loss="binary_ce" if n_classes == 2 else "categorical_ce"
        )

    meta = table.meta if cfg.metadata_enabled else np.zeros_like(table.meta)
    index_of = {cid: i for i, cid in enumerate(table.ids)}
    items = list(zip(table.ids, (int(l) for l in table.labels)))

    started = time.monotonic()
    fold_results: list[FoldResult] = []
    agg_counts = np.zeros((n_classes, n_classes), dtype=np.int64)
    for rep in range(cfg.repeats):
        folds = stratified_folds_for_rep(items, cfg.k, cfg.seed, rep)
        _fold_partition_check(folds, table.ids)
        for fold_i, test_ids in enumerate(folds):
            test_idx = np.asarray([index_of[c] for c in test_ids], dtype=np.intp)
            test_mask = np.zeros(table.n, dtype=bool)
            test_mask[test_idx] = True
            train_idx = np.flatnonzero(~test_mask)
            if set(test_idx) & set(train_idx):
                raise LeakageError("train/test overlap within a fold")

            counts = np.bincount(table.labels[train_idx], minlength=n_classes)
            weights = compute_class_weights(counts.tolist())
            fold_train_cfg = dataclasses.replace(
                train_cfg,
                class_weights=tuple(float(w) for w in weights),
                seed=_derived_seed(cfg.seed, rep, fold_i, 1),
            )
            fold_model_cfg = dataclasses.replace(
                model_cfg, seed=_derived_seed(cfg.seed, rep, fold_i, 2)
            )
            model, _ = train(
                table.run[train_idx],
                table.kick[train_idx],
                meta[train_idx],
                table.labels[train_idx],
                fold_model_cfg,
                fold_train_cfg,
            )
            pred, _ = model.predict(
                table.run[test_idx], table.kick[test_idx], meta[test_idx]
            )
            y_true = table.labels[test_idx]
            bundle = compute_metrics(y_true, pred, table.space)
            cm = confusion(y_true, pred, table.space)
            agg_counts += cm.counts
            fold_results.append(
                FoldResult(
                    repetition=rep,
                    fold=fold_i,
                    test_ids=list(test_ids),
                    metrics=bundle,
                    confusion_counts=cm.counts,
                )
            )

    mean = {
        name: float(np.mean([getattr(fr.metrics, name) for fr in fold_results]))
        for name in METRIC_NAMES
    }
    std = {
        name: float(np.std([getattr(fr.metrics, name) for fr in fold_results]))
        for name in METRIC_NAMES
    }
    return ExperimentReport(
        config=cfg,
        folds=fold_results,
        mean=mean,
        std=std,
        confusion=ConfusionMatrix(counts=agg_counts, classes=table.space.classes),
        n_samples=table.n,
        runtime_seconds=time.monotonic() - started,
    )


def stratified_folds_for_rep(
    items: list[tuple[str, int]], k: int, seed: int, repetition: int
) -> list[list[str]]:
    """Fold assignment for one repetition; depends only on (seed, repetition)."""
    from .dataset import stratified_kfold

    return stratified_kfold(items, k, _derived_seed(seed, repetition))


def ablate_metadata(
    table: SampleTable,
    base_cfg: ExperimentConfig,
    model_cfg: Optional[ModelConfig] = None,
    train_cfg: Optional[TrainingConfig] = None,
) -> tuple[ExperimentReport, ExperimentReport, dict[str, float]]:
    """Paired CV runs with and without the metadata input.

    The "without" run retrains the same architecture with the metadata
    input zeroed; folds and seeds are shared exactly, so deltas isolate
    the metadata contribution. Returns (with, without, mean deltas).
    """
    cfg_with = dataclasses.replace(base_cfg, metadata_enabled=True)
    cfg_without = dataclasses.replace(base_cfg, metadata_enabled=False)
    report_with = run_cv(table, cfg_with, model_cfg, train_cfg)
    report_without = run_cv(table, cfg_without, model_cfg, train_cfg)
    for fw, fo in zip(report_with.folds, report_without.folds):
        if fw.test_ids != fo.test_ids:
            raise LeakageError("ablation fold pairing broken")
    deltas = {
        name: report_with.mean[name] - report_without.mean[name]
        for name in METRIC_NAMES
    }
    return report_with, report_without, deltas


def select_best(reports: Sequence[ExperimentReport], criterion: str = "accuracy") -> int:
    """Index of the best report; ties break on F1, then backbone name."""
    if not reports:
        raise ValueError("no reports given")
    if criterion not in ("accuracy", "f1"):
        raise ValueError("criterion must be accuracy or f1")

    def sort_key(i: int):
        rep = reports[i]
        return (-rep.mean[criterion], -rep.mean["f1"], rep.config.backbone, i)

    return min(range(len(reports)), key=sort_key)


# -- rendering ---------------------------------------------------------------

TABLE_COLUMNS = ("Backbone", "#Frames", "Pooling", "Accuracy", "Precision", "Recall", "F1-Score")


def _pct(value: float) -> str:
    return f"{100.0 * value:.1f}%"


def table_rows_from_reports(reports: Sequence[ExperimentReport]) -> list[dict]:
    rows = []
    for rep in reports:
        rows.append(
            {
                "backbone": DISPLAY_NAMES.get(rep.config.backbone, rep.config.backbone),
                "frames": frames_per_window(rep.config.backbone),
                "pooling": rep.config.pooling.capitalize(),
                "accuracy": rep.mean["accuracy"],
                "precision": rep.mean["precision"],
                "recall": rep.mean["recall"],
                "f1": rep.mean["f1"],
            }
        )
    return rows


def render_table(rows: Sequence[dict]) -> str:
    """Plain-text comparison table, one row per experiment, input order kept."""
    cells = [list(TABLE_COLUMNS)]
    for row in rows:
        cells.append(
            [
                str(row["backbone"]),
                str(row["frames"]),
                str(row["pooling"]),
                _pct(row["accuracy"]),
                _pct(row["precision"]),
                _pct(row["recall"]),
                _pct(row["f1"]),
            ]
        )
    widths = [max(len(r[c]) for r in cells) for c in range(len(TABLE_COLUMNS))]
    lines = []
    for i, row in enumerate(cells):
        lines.append(" | ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
        if i == 0:
            lines.append("-+-".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def render_report(
    reports: Sequence[ExperimentReport], out_dir: str | Path
) -> str:
    """Write the comparison table, per-report metrics, and confusion figures.

    Emits ``table.txt`` and ``table.json`` at the top level and, per
    report, ``<tag>/metrics.json``, ``<tag>/confusion.png`` plus numeric
    sidecars ``confusion_counts.csv`` / ``confusion_row_normalized.csv``.
    Returns the rendered table text.
    """
    if not reports:
        raise ValueError("no reports given")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = table_rows_from_reports(reports)
    text = render_table(rows)
    (out / "table.txt").write_text(text, encoding="utf-8")
    (out / "table.json").write_text(
        json.dumps(rows, indent=2, sort_keys=True), encoding="utf-8"
    )
    for rep in reports:
        rep_dir = out / rep.tag
        rep_dir.mkdir(parents=True, exist_ok=True)
        payload = rep.canonical_dict()
        payload["runtime_seconds"] = rep.runtime_seconds
        (rep_dir / "metrics.json").write_text(
            json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8"
        )
        _write_confusion_csv(rep_dir / "confusion_counts.csv", rep.confusion.counts, rep)
        _write_confusion_csv(
            rep_dir / "confusion_row_normalized.csv", rep.confusion.row_normalized, rep
        )
        _render_confusion_png(rep_dir / "confusion.png", rep)
    return text


def _write_confusion_csv(path: Path, matrix: np.ndarray, rep: ExperimentReport) -> None:
    classes = rep.config.label_space.classes
    lines = ["true\\pred," + ",".join(classes)]
    for name, row in zip(classes, matrix):
        lines.append(name + "," + ",".join(str(v) for v in row.tolist()))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _render_confusion_png(path: Path, rep: ExperimentReport) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    norm = rep.confusion.row_normalized
    classes = rep.config.label_space.classes
    fig, ax = plt.subplots(figsize=(4.2, 3.6))
    im = ax.imshow(norm, cmap="Blues", vmin=0.0, vmax=1.0)
    ax.set_xticks(range(len(classes)), classes)
    ax.set_yticks(range(len(classes)), classes)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    ax.set_title(rep.tag)
    for i in range(len(classes)):
        for j in range(len(classes)):
            ax.text(
                j,
                i,
                f"{100.0 * norm[i, j]:.1f}%",
                ha="center",
                va="center",
                color="black" if norm[i, j] < 0.6 else "white",
                fontsize=9,
            )
    fig.colorbar(im, ax=ax, fraction=0.046)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
