"""Frame storage for clips and stage footage.

Clips live on disk either as a ``.npy`` stack of shape (T, H, W, 3) uint8
or as a directory of numbered ``.png`` frames. Real video files are read
through OpenCV when it is installed; the test corpus never needs it.
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np
from PIL import Image

VIDEO_SUFFIXES = {".mp4", ".avi", ".mov", ".mkv"}


def resolve_source(source_uri: str, root: str | Path | None = None) -> Path:
    path = Path(source_uri)
    if not path.is_absolute() and root is not None:
        path = Path(root) / path
    return path


def load_frames(source_uri: str, root: str | Path | None = None) -> np.ndarray:
    """Load a clip as a (T, H, W, 3) uint8 array."""
    path = resolve_source(source_uri, root)
    if path.suffix == ".npy":
        frames = np.load(path)
        if frames.ndim != 4 or frames.shape[-1] != 3 or frames.dtype != np.uint8:
            raise ValueError(f"{path}: expected a (T, H, W, 3) uint8 stack")
        return frames
    if path.is_dir():
        files = sorted(path.glob("*.png"))
        if not files:
            raise FileNotFoundError(f"{path}: no .png frames found")
        frames = np.stack([np.asarray(Image.open(f).convert("RGB")) for f in files])
        return frames.astype(np.uint8)
    if path.suffix.lower() in VIDEO_SUFFIXES:
        return _load_video(path)
    raise ValueError(f"unsupported clip source: {path}")


def _load_video(path: Path) -> np.ndarray:
    try:
        import cv2
    except ImportError as exc:
        raise RuntimeError(
            f"{path}: reading video files requires opencv-python"
        ) from exc
    cap = cv2.VideoCapture(str(path))
    frames = []
    while True:
        ok, frame = cap.read()
        if not ok:
            break
        frames.append(cv2.cvtColor(frame, cv2.COLOR_BGR2RGB))
    cap.release()
    if not frames:
        raise ValueError(f"{path}: no frames decoded")
    return np.stack(frames).astype(np.uint8)


def save_frames(path: str | Path, frames: np.ndarray) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if frames.ndim != 4 or frames.shape[-1] != 3 or frames.dtype != np.uint8:
        raise ValueError("expected a (T, H, W, 3) uint8 stack")
    np.save(path, frames)


def encode_png(frame: np.ndarray) -> bytes:
    """Losslessly encode one (H, W, 3) uint8 frame; byte-stable per input."""
    buf = io.BytesIO()
    Image.fromarray(frame, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def resize_nearest(frames: np.ndarray, height: int, width: int) -> np.ndarray:
    """Nearest-neighbour resize of a (..., H, W, C) stack; deterministic."""
    h, w = frames.shape[-3], frames.shape[-2]
    if (h, w) == (height, width):
        return frames
    rows = np.minimum((np.arange(height) + 0.5) * h / height, h - 1).astype(np.intp)
    cols = np.minimum((np.arange(width) + 0.5) * w / width, w - 1).astype(np.intp)
    return frames[..., rows[:, None], cols[None, :], :]
