"""Post-processing attacks applied before feature extraction."""

from __future__ import annotations

import re

import numpy as np
from scipy import ndimage

from ..codecs import CodecSettings, encode_decode
from ..imagecore import ImageBuffer


def requality(img: ImageBuffer, quality: int) -> ImageBuffer:
    """Re-save through the baseline DCT codec at ``quality``."""
    return encode_decode(img, CodecSettings("baseline_dct", float(quality))).decoded


def resize(img: ImageBuffer, factor: float) -> ImageBuffer:
    """Bilinear rescale by ``factor`` with pixel-centre alignment."""
    if not 0 < factor:
        raise ValueError(f"resize factor must be positive, got {factor}")
    a = img.as_float()
    h, w = a.shape[:2]
    nh, nw = int(round(h * factor)), int(round(w * factor))
    if nh < 1 or nw < 1:
        raise ValueError(f"resize to {factor} leaves an empty image")
    yy = (np.arange(nh) + 0.5) / factor - 0.5
    xx = (np.arange(nw) + 0.5) / factor - 0.5
    grid = np.meshgrid(yy, xx, indexing="ij")
    out = np.stack(
        [ndimage.map_coordinates(a[..., c], grid, order=1, mode="nearest") for c in range(a.shape[2])],
        axis=-1,
    )
    return ImageBuffer.from_array(np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8))


_ATTACK = re.compile(r"^(requality|resize)(\d+)$")


def parse_attack(name: str):
    """``"requality90"`` -> ("requality", 90); ``"resize70"`` -> ("resize", 70)."""
    m = _ATTACK.match(name)
    if not m:
        raise ValueError(f"unknown attack {name!r}; expected requality<Q> or resize<percent>")
    return m.group(1), int(m.group(2))


def apply_attack(img: ImageBuffer, name: str) -> ImageBuffer:
    kind, amount = parse_attack(name)
    if kind == "requality":
        return requality(img, amount)
    return resize(img, amount / 100.0)
