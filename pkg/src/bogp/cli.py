"""Command-line interface for the free-kick BoGP pipeline."""

from __future__ import annotations

import dataclasses
import json
import os
from pathlib import Path

import click
import numpy as np

from . import __version__
from .backbones import BACKBONE_NAMES, get_backbone
from .classifier import ModelConfig, TrainingConfig, compute_class_weights, train
from .dataset import (
    LabelSpace,
    apply_exclusion_filters,
    project_label,
    stratified_kfold,
    EXCLUDED,
)
from .embeddings import EmbeddingCache
from .experiments import (
    ExperimentConfig,
    run_cv,
    render_report,
    render_table,
    stratified_folds_for_rep,
    table_from_cache,
)
from .manifest import read_manifest, write_manifest
from .pipeline import preprocess_and_embed, preprocess_record, save_stages

POOL_ALIASES = {"avg": "average", "average": "average", "max": "max"}

STAGE_ALIASES = {"run": "running", "running": "running", "kick": "kicking", "kicking": "kicking"}


def _pooling(value: str) -> str:
    try:
        return POOL_ALIASES[value]
    except KeyError:
        raise click.BadParameter("pooling must be avg or max") from None


def _backbone_name(value: str) -> str:
    # Accept both the canonical token (X3D_L) and the display form (X3D-L).
    name = value.replace("-", "_").replace(" ", "_")
    if name not in BACKBONE_NAMES:
        raise click.BadParameter(f"unknown backbone {value!r}; choose from {BACKBONE_NAMES}")
    return name


def _stage_list(value: str) -> tuple[str, ...]:
    try:
        stages = tuple(STAGE_ALIASES[s.strip()] for s in value.split(",") if s.strip())
    except KeyError as exc:
        raise click.BadParameter(f"unknown stage {exc.args[0]!r}; use run,kick") from None
    if not stages:
        raise click.BadParameter("at least one stage required")
    return stages


def _space(classes: int) -> LabelSpace:
    return LabelSpace.for_classes(classes)


@click.group()
@click.version_option(version=__version__, prog_name="bogp")
def main() -> None:
    """Free-kick ball-on-goal position pipeline."""


@main.command()
@click.argument("directory", type=click.Path(exists=True, file_okay=False))
@click.option("--manifest", "manifest_path", required=True, type=click.Path())
@click.option("--fps", default=30.0, show_default=True)
def ingest(directory: str, manifest_path: str, fps: float) -> None:
    """Scan DIRECTORY for clip stacks (.npy) and build a manifest."""
    from .clips import load_frames

    records = []
    root = Path(directory)
    for path in sorted(root.glob("*.npy")):
        frames = load_frames(str(path))
        from .dataset import ClipRecord

        records.append(
            ClipRecord(
                clip_id=path.stem,
                source_uri=str(path.relative_to(root)),
                fps=fps,
                frame_count=int(frames.shape[0]),
                width=int(frames.shape[2]),
                height=int(frames.shape[1]),
            )
        )
    if not records:
        raise click.ClickException(f"no .npy clips found under {directory}")
    write_manifest(manifest_path, records)
    click.echo(f"ingested {len(records)} clips into {manifest_path}")


@main.command("filter")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
def filter_cmd(manifest_path: str, out_path: str) -> None:
    """Apply the exclusion cascade and write the surviving manifest."""
    records = read_manifest(manifest_path)
    kept, excluded, counts = apply_exclusion_filters(records)
    write_manifest(out_path, kept + excluded)
    click.echo("cascade: " + " -> ".join(str(c) for c in counts))
    click.echo(f"kept {len(kept)}, excluded {len(excluded)}; wrote {out_path}")


@main.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--k", default=10, show_default=True)
@click.option("--repeats", default=5, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--classes", default=3, type=click.Choice(["2", "3"]), show_default=True)
@click.option("--out", "out_path", type=click.Path(), default=None)
def folds(
    manifest_path: str, k: int, repeats: int, seed: int, classes: str, out_path: str
) -> None:
    """Print stratified fold assignments for each repetition."""
    space = _space(int(classes))
    records = read_manifest(manifest_path)
    items = []
    for rec in sorted(records, key=lambda r: r.clip_id):
        if rec.exclusion is not None or rec.annotation is None:
            continue
        label = project_label(rec.annotation, space)
        if label != EXCLUDED:
            items.append((rec.clip_id, label))
    if not items:
        raise click.ClickException("no usable annotated clips in the manifest")
    payload = {
        "seed": seed,
        "k": k,
        "repeats": repeats,
        "classes": space.classes,
        "repetitions": [
            stratified_folds_for_rep(items, k, seed, rep) for rep in range(repeats)
        ],
    }
    text = json.dumps(payload, indent=2)
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
        click.echo(f"wrote folds for {len(items)} clips to {out_path}")
    else:
        click.echo(text)


@main.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--tracks", "tracks_dir", required=True, type=click.Path(exists=True))
@click.option("--tau", default=30, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--clips-root", default=None, type=click.Path())
def preprocess(
    manifest_path: str, tracks_dir: str, tau: int, out_dir: str, clips_root: str
) -> None:
    """Composite kept clips and write running/kicking stage footage."""
    records = read_manifest(manifest_path)
    root = clips_root or str(Path(manifest_path).parent)
    done = 0
    for rec in records:
        if rec.exclusion is not None or rec.annotation is None:
            continue
        running, kicking = preprocess_record(rec, root, tracks_dir, tau=tau)
        save_stages(out_dir, [running, kicking])
        done += 1
    click.echo(f"preprocessed {done} clips into {out_dir}")


@main.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--backbone", default="STUB", show_default=True)
@click.option("--pooling", default="avg", show_default=True)
@click.option("--stages", default="run,kick", show_default=True,
              help="comma list of stages to embed: run,kick")
@click.option("--cache", "cache_dir", required=True, type=click.Path())
@click.option("--tracks", "tracks_dir", required=True, type=click.Path(exists=True))
@click.option("--clips-root", default=None, type=click.Path())
@click.option("--tau", default=30, show_default=True)
@click.option("--both-poolings/--single-pooling", default=True, show_default=True)
def embed(
    manifest_path: str,
    backbone: str,
    pooling: str,
    stages: str,
    cache_dir: str,
    tracks_dir: str,
    clips_root: str,
    tau: int,
    both_poolings: bool,
) -> None:
    """Preprocess, window, encode, pool, and cache embeddings."""
    records = read_manifest(manifest_path)
    root = clips_root or str(Path(manifest_path).parent)
    cache = EmbeddingCache(cache_dir)
    bb = get_backbone(_backbone_name(backbone))
    poolings = ("average", "max") if both_poolings else (_pooling(pooling),)
    counters = preprocess_and_embed(
        records, root, tracks_dir, cache, bb,
        poolings=poolings, tau=tau, stages=_stage_list(stages),
    )
    click.echo(json.dumps(counters))


@main.command("train")
@click.option("--cache", "cache_dir", required=True, type=click.Path(exists=True))
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--backbone", default="STUB", show_default=True)
@click.option("--pooling", default="avg", show_default=True)
@click.option("--classes", default=3, type=click.Choice(["2", "3"]), show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--epochs", default=100, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def train_cmd(
    cache_dir: str,
    manifest_path: str,
    backbone: str,
    pooling: str,
    classes: str,
    seed: int,
    epochs: int,
    out_path: str,
) -> None:
    """Train one model on every kept clip and write a checkpoint."""
    space = _space(int(classes))
    records = read_manifest(manifest_path)
    table = table_from_cache(
        records, EmbeddingCache(cache_dir), _backbone_name(backbone), _pooling(pooling), space
    )
    counts = table.class_counts()
    weights = compute_class_weights(counts)
    model_cfg = ModelConfig(
        r_run=table.run.shape[1],
        r_kick=table.kick.shape[1],
        n_classes=space.n_classes,
        seed=seed,
    )
    train_cfg = TrainingConfig(
        loss="binary_ce" if space.n_classes == 2 else "categorical_ce",
        class_weights=tuple(float(w) for w in weights),
        epochs=epochs,
        seed=seed,
    )
    model, log = train(table.run, table.kick, table.meta, table.labels, model_cfg, train_cfg)
    model.save(out_path)
    click.echo(
        f"trained on {table.n} clips (counts {counts}); "
        f"final loss {log.epoch_losses[-1]:.4f}; checkpoint {out_path}"
    )


@main.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--cache", "cache_dir", required=True, type=click.Path(exists=True))
@click.option("--backbone", default="STUB", show_default=True)
@click.option("--pooling", default="avg", show_default=True)
@click.option("--classes", default=3, type=click.Choice(["2", "3"]), show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--repeats", default=5, show_default=True)
@click.option("--k", default=10, show_default=True)
@click.option("--no-metadata", is_flag=True, default=False)
@click.option("--epochs", default=100, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
def evaluate(
    manifest_path: str,
    cache_dir: str,
    backbone: str,
    pooling: str,
    classes: str,
    seed: int,
    repeats: int,
    k: int,
    no_metadata: bool,
    epochs: int,
    out_dir: str,
) -> None:
    """Run repeated k-fold cross-validation and write a report directory."""
    space = _space(int(classes))
    records = read_manifest(manifest_path)
    backbone = _backbone_name(backbone)
    table = table_from_cache(
        records, EmbeddingCache(cache_dir), backbone, _pooling(pooling), space
    )
    cfg = ExperimentConfig(
        backbone=backbone,
        pooling=_pooling(pooling),
        label_mode=space.mode,
        repeats=repeats,
        k=k,
        seed=seed,
        metadata_enabled=not no_metadata,
    )
    train_cfg = TrainingConfig(
        loss="binary_ce" if space.n_classes == 2 else "categorical_ce", epochs=epochs
    )
    report = run_cv(table, cfg, train_cfg=train_cfg)
    text = render_report([report], out_dir)
    click.echo(text)
    click.echo(
        f"mean accuracy {report.mean['accuracy']:.3f} "
        f"+- {report.std['accuracy']:.3f} over {len(report.folds)} folds"
    )


@main.command()
@click.argument("reports", nargs=-1, required=True,
                type=click.Path(exists=True, dir_okay=True))
@click.option("--out", "out_path", type=click.Path(), default=None)
def compare(reports: tuple[str, ...], out_path: str) -> None:
    """Tabulate one or more report directories (or metrics.json files)."""
    rows = []
    for item in reports:
        path = Path(item)
        if path.is_dir():
            path = path / "metrics.json"
        payload = json.loads(path.read_text(encoding="utf-8"))
        cfg = payload["config"]
        from .backbones import DISPLAY_NAMES, frames_per_window

        rows.append(
            {
                "backbone": DISPLAY_NAMES.get(cfg["backbone"], cfg["backbone"]),
                "frames": frames_per_window(cfg["backbone"]),
                "pooling": cfg["pooling"].capitalize(),
                "accuracy": payload["aggregate"]["mean"]["accuracy"],
                "precision": payload["aggregate"]["mean"]["precision"],
                "recall": payload["aggregate"]["mean"]["recall"],
                "f1": payload["aggregate"]["mean"]["f1"],
            }
        )
    text = render_table(rows)
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
    click.echo(text)


@main.command()
@click.option("--manifest", "manifest_path", default=None, type=click.Path(),
              help="defaults to the BOGP_MANIFEST environment variable")
@click.option("--clips-root", default=None, type=click.Path())
@click.option("--audit", "audit_path", default=None, type=click.Path())
@click.option("--port", default=8008, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
def serve(
    manifest_path: str, clips_root: str, audit_path: str, port: int, host: str
) -> None:
    """Run the annotation service."""
    import uvicorn

    from .service import create_app

    manifest_path = manifest_path or os.environ.get("BOGP_MANIFEST")
    if not manifest_path:
        raise click.ClickException("set --manifest or the BOGP_MANIFEST env var")
    app = create_app(manifest_path, clips_root, audit_path)
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command()
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--clips", "n_clips", default=120, show_default=True)
@click.option("--seed", default=7, show_default=True)
def synth(out_dir: str, n_clips: int, seed: int) -> None:
    """Generate a scripted synthetic corpus (clips, tracks, manifest)."""
    from .synthetic import generate_corpus

    clips = generate_corpus(out_dir, n_clips=n_clips, seed=seed)
    labels = [c.record.annotation.bogp_label for c in clips]
    summary = {label: labels.count(label) for label in sorted(set(labels))}
    click.echo(f"wrote {len(clips)} clips to {out_dir} ({summary})")


if __name__ == "__main__":
    main()
