"""Latent quantization correlation.

Per latent channel ``y_c`` (flattened over spatial positions)::

    phi(y_c) = <y_c, round(y_c)> / (||y_c|| * ||round(y_c)||)

Latents of an image that already went through a quantizer sit close to the
integer grid (phi near 1) or collapse to zero (phi = 0); unquantized content
lands in between.  The ``truncated`` mode replaces the rounded vector by its
sign pattern, keeping only the zero/nonzero information.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .codecs import CodecSettings, LatentUnavailableError, get_codec, round_half_away
from .imagecore import ImageBuffer, center_crop

MODES = ("full", "truncated")
PATCH = 256


@dataclass(frozen=True)
class QuantFeature:
    mode: str
    values: np.ndarray

    @property
    def channel_count(self) -> int:
        return int(self.values.shape[0])


def _phi_rows(y: np.ndarray, mode: str) -> np.ndarray:
    q = round_half_away(y)
    if mode == "truncated":
        q = np.sign(q)
    elif mode != "full":
        raise ValueError(f"unknown mode {mode!r}; choose from {MODES}")
    ny = np.sqrt(np.sum(y * y, axis=-1))
    nq = np.sqrt(np.sum(q * q, axis=-1))
    ok = (ny > 0) & (nq > 0)
    out = np.zeros(y.shape[0])
    out[ok] = np.sum(y * q, axis=-1)[ok] / (ny[ok] * nq[ok])
    return np.clip(out, -1.0, 1.0)


def channel_phi(y_c, mode: str = "full") -> float:
    y = np.asarray(y_c, dtype=np.float64).ravel()
    if y.size == 0:
        raise ValueError("channel_phi needs a nonempty vector")
    if not np.all(np.isfinite(y)):
        raise ValueError("channel_phi needs finite values")
    return float(_phi_rows(y[None, :], mode)[0])


def latent_phi(latent: np.ndarray, mode: str = "full") -> QuantFeature:
    """phi for every channel of a ``C x H' x W'`` latent."""
    latent = np.asarray(latent, dtype=np.float64)
    return QuantFeature(mode, _phi_rows(latent.reshape(latent.shape[0], -1), mode))


def extract_quant_features(
    img: ImageBuffer,
    settings: CodecSettings,
    mode: str = "full",
    patch: int = PATCH,
    probe: str = "analysis",
) -> QuantFeature:
    """Centre-crop, run the probe codec's analysis transform, and compute phi per channel.

    ``probe="analysis"`` reads the unquantized analysis output of the crop;
    ``probe="decoded"`` first round-trips the crop through the probe codec.
    """
    codec = get_codec(settings)
    if not codec.exposes_latent:
        raise LatentUnavailableError(f"codec {settings.codec_id!r} does not expose latents")
    crop = center_crop(img, patch, patch)
    if probe == "decoded":
        crop = codec.encode_decode(crop).decoded
    elif probe != "analysis":
        raise ValueError(f"unknown probe {probe!r}")
    return latent_phi(codec.analyze(crop).values, mode)


def mean_phi(feature: QuantFeature) -> float:
    if feature.values.size == 0:
        raise ValueError("empty feature")
    return float(np.mean(feature.values))


def write_quant_features(path, rows, *, settings: CodecSettings) -> Path:
    """``rows`` is an iterable of ``(image_id, QuantFeature)``."""
    path = Path(path)
    channels = set()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["image_id", "mode", "channel_index", "phi"])
        for image_id, feat in rows:
            channels.add(feat.channel_count)
            for i, v in enumerate(feat.values):
                writer.writerow([image_id, feat.mode, i, repr(float(v))])
    sidecar = {
        "cue": "quant",
        "codec_id": settings.codec_id,
        "step": settings.strength,
        "options": dict(sorted(settings.options.items())),
        "C": sorted(channels)[0] if len(channels) == 1 else sorted(channels),
        "code_version": __version__,
    }
    Path(str(path) + ".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    return path


def read_quant_features(path) -> dict:
    """``{image_id: QuantFeature}``."""
    acc: dict = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            acc.setdefault(row["image_id"], (row["mode"], []))[1].append(
                (int(row["channel_index"]), float(row["phi"]))
            )
    return {k: QuantFeature(mode, np.array([v for _, v in sorted(vals)])) for k, (mode, vals) in acc.items()}
