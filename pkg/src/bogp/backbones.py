"""Action-recognition encoder adapters.

Each adapter declares its clip length ``q``, embedding dimension ``r``,
expected input resolution, and turns a batch of q-frame windows into one
feature vector per window. The eleven pretrained encoders are consumed as
opaque models through torch hub when the heavyweight checkpoints are
installed; ``STUB`` is a fully specified deterministic encoder so the test
suite runs without weights or accelerators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .clips import resize_nearest

# Frames per window for each encoder, as published for the Kinetics-400
# checkpoints these adapters wrap.
BACKBONE_Q = {
    "C2D": 8,
    "I3D": 8,
    "I3D_NLN": 8,
    "Slow4x16": 4,
    "Slow8x8": 8,
    "SlowFast4x16": 32,
    "SlowFast8x8": 32,
    "X3D_XS": 4,
    "X3D_S": 4,
    "X3D_M": 13,
    "X3D_L": 16,
}

DISPLAY_NAMES = {
    "C2D": "C2D",
    "I3D": "I3D",
    "I3D_NLN": "I3D NLN",
    "Slow4x16": "Slow4x16",
    "Slow8x8": "Slow8x8",
    "SlowFast4x16": "SlowFast4x16",
    "SlowFast8x8": "SlowFast8x8",
    "X3D_XS": "X3D-XS",
    "X3D_S": "X3D-S",
    "X3D_M": "X3D-M",
    "X3D_L": "X3D-L",
    "STUB": "STUB",
}

BACKBONE_NAMES = tuple(BACKBONE_Q) + ("STUB",)


class BackboneUnavailableError(RuntimeError):
    """The requested encoder cannot run in this environment."""


@dataclass(frozen=True)
class BackboneDescriptor:
    name: str
    q: int
    r: int
    input_size: tuple[int, int]
    weights_provenance: str

    def __post_init__(self) -> None:
        if self.q < 1 or self.r < 1:
            raise ValueError("q and r must be positive")

    @property
    def display_name(self) -> str:
        return DISPLAY_NAMES.get(self.name, self.name)


class Backbone(Protocol):
    descriptor: BackboneDescriptor

    def encode(self, windows: np.ndarray) -> np.ndarray:
        """Map (n, q, H, W, 3) uint8 windows to a (n, r) float32 matrix."""
        ...


STUB_R = 16
STUB_Q = 4
_STUB_STATS = 5


def _stub_projection() -> np.ndarray:
    """The fixed 15x5 projection: P[i][j] = sin((i+1) + 2.7 * (j+1))."""
    proj = np.empty((STUB_R - 1, _STUB_STATS), dtype=np.float64)
    for i in range(STUB_R - 1):
        for j in range(_STUB_STATS):
            proj[i, j] = math.sin((i + 1) + 2.7 * (j + 1))
    return proj


class StubBackbone:
    """Deterministic toy encoder used by the test suite.

    One window of q frames maps to 16 features computed as follows. Each
    frame becomes a grayscale image g_t = mean(RGB) / 255 (float64,
    values in [0, 1], H x W). With crop(g) the central half of the image
    (rows H//4 .. H//4 + H//2 - 1, columns likewise) and d_t = g_{t+1} - g_t
    the q-1 consecutive difference images:

    - feature 0: mean over t of mean(crop(g_t))
    - stats s (5 values, zero where undefined):
        s0 = mean over t of mean(|d_t|)
        s1 = mean over t of mean(d_t)
        s2 = mean over consecutive diff pairs of (mx_{t+1} - mx_t), where
             (mx_t, my_t) is the intensity centroid of |d_t| in normalized
             coordinates ((col + 0.5) / W, (row + 0.5) / H); an all-zero
             diff has centroid (0.5, 0.5)
        s3 = same as s2 for my
        s4 = mean over t of mean(g_t)
    - features 1..15: P @ s with P[i][j] = sin((i+1) + 2.7 * (j+1))

    The result is cast to float32. Windows are resized to 64x64 with
    nearest-neighbour sampling before encoding.
    """

    def __init__(self, q: int = STUB_Q):
        self.descriptor = BackboneDescriptor(
            name="STUB",
            q=q,
            r=STUB_R,
            input_size=(64, 64),
            weights_provenance="none (deterministic formula)",
        )
        self._proj = _stub_projection()

    def encode(self, windows: np.ndarray) -> np.ndarray:
        if windows.ndim != 5 or windows.shape[1] != self.descriptor.q:
            raise ValueError(
                f"expected (n, {self.descriptor.q}, H, W, 3) windows, got {windows.shape}"
            )
        height, width = self.descriptor.input_size
        windows = resize_nearest(windows, height, width)
        out = np.empty((windows.shape[0], STUB_R), dtype=np.float32)
        for i in range(windows.shape[0]):
            out[i] = self._encode_window(windows[i])
        return out

    def _encode_window(self, frames: np.ndarray) -> np.ndarray:
        gray = frames.astype(np.float64).mean(axis=-1) / 255.0
        q, height, width = gray.shape
        r0 = height // 4
        c0 = width // 4
        crop = gray[:, r0 : r0 + height // 2, c0 : c0 + width // 2]
        crop_mean = crop.mean()

        stats = np.zeros(_STUB_STATS, dtype=np.float64)
        stats[4] = gray.mean()
        if q > 1:
            diffs = gray[1:] - gray[:-1]
            stats[0] = np.abs(diffs).mean()
            stats[1] = diffs.mean()
            centroids = np.array([_energy_centroid(np.abs(d)) for d in diffs])
            if len(centroids) > 1:
                steps = centroids[1:] - centroids[:-1]
                stats[2] = steps[:, 0].mean()
                stats[3] = steps[:, 1].mean()
        return np.concatenate(([crop_mean], self._proj @ stats)).astype(np.float32)


def _energy_centroid(energy: np.ndarray) -> tuple[float, float]:
    total = energy.sum()
    if total == 0.0:
        return 0.5, 0.5
    height, width = energy.shape
    cols = (np.arange(width) + 0.5) / width
    rows = (np.arange(height) + 0.5) / height
    mx = float((energy.sum(axis=0) * cols).sum() / total)
    my = float((energy.sum(axis=1) * rows).sum() / total)
    return mx, my


# torch hub ids for the pretrained encoders; availability depends on the
# local torch/pytorchvideo installation and downloaded checkpoints.
_HUB_IDS = {
    "C2D": "c2d_r50",
    "I3D": "i3d_r50",
    "Slow4x16": "slow_r50",
    "Slow8x8": "slow_r50",
    "SlowFast4x16": "slowfast_r50",
    "SlowFast8x8": "slowfast_r50",
    "X3D_XS": "x3d_xs",
    "X3D_S": "x3d_s",
    "X3D_M": "x3d_m",
    "X3D_L": "x3d_l",
}

_INPUT_SIZES = {
    "X3D_XS": (182, 182),
    "X3D_S": (182, 182),
    "X3D_M": (256, 256),
    "X3D_L": (356, 356),
}


class TorchHubBackbone:
    """Wraps a pretrained video encoder loaded through torch hub.

    The classification head is replaced with identity so ``encode`` emits
    the penultimate features; ``r`` is probed from the checkpoint, never
    hard-coded. Frames are resized to the declared input resolution and
    normalized with the checkpoint's mean/std.
    """

    MEAN = np.array([0.45, 0.45, 0.45], dtype=np.float32)
    STD = np.array([0.225, 0.225, 0.225], dtype=np.float32)

    def __init__(self, name: str):
        if name not in _HUB_IDS:
            raise BackboneUnavailableError(f"no hub mapping for backbone {name!r}")
        try:
            import torch
        except ImportError as exc:
            raise BackboneUnavailableError(
                f"backbone {name} needs torch; install the 'backbones' extras"
            ) from exc
        self._torch = torch
        try:
            model = torch.hub.load(
                "facebookresearch/pytorchvideo", _HUB_IDS[name], pretrained=True
            )
        except Exception as exc:
            raise BackboneUnavailableError(
                f"could not load pretrained weights for {name}: {exc}"
            ) from exc
        model.eval()
        head = model.blocks[-1]
        r = int(head.proj.in_features)
        head.proj = torch.nn.Identity()
        if hasattr(head, "activation") and head.activation is not None:
            head.activation = torch.nn.Identity()
        self._model = model
        self._slowfast = name.startswith("SlowFast")
        self.descriptor = BackboneDescriptor(
            name=name,
            q=BACKBONE_Q[name],
            r=r,
            input_size=_INPUT_SIZES.get(name, (256, 256)),
            weights_provenance="Kinetics-400",
        )

    def encode(self, windows: np.ndarray) -> np.ndarray:
        torch = self._torch
        height, width = self.descriptor.input_size
        windows = resize_nearest(windows, height, width)
        x = windows.astype(np.float32) / 255.0
        x = (x - self.MEAN) / self.STD
        # (n, q, H, W, C) -> (n, C, q, H, W)
        tensor = torch.from_numpy(np.ascontiguousarray(x.transpose(0, 4, 1, 2, 3)))
        with torch.no_grad():
            if self._slowfast:
                # Slow pathway samples every 4th frame of the fast pathway.
                slow = tensor[:, :, ::4]
                feats = self._model([slow, tensor])
            else:
                feats = self._model(tensor)
        out = feats.squeeze().cpu().numpy().astype(np.float32)
        return out.reshape(windows.shape[0], self.descriptor.r)


def get_backbone(name: str, **kwargs) -> Backbone:
    if name == "STUB":
        return StubBackbone(**kwargs)
    if name in BACKBONE_Q:
        return TorchHubBackbone(name)
    raise ValueError(f"unknown backbone {name!r}; choose from {BACKBONE_NAMES}")


def frames_per_window(name: str) -> int:
    """Window length q for a backbone name, without loading any weights."""
    if name == "STUB":
        return STUB_Q
    if name in BACKBONE_Q:
        return BACKBONE_Q[name]
    raise ValueError(f"unknown backbone {name!r}")
