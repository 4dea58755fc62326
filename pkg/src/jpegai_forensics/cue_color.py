"""Row-wise correlations between highpass residual differences of R, G and B.

For a centre channel ``g`` with outer channels ``r`` and ``b``::

    rho(g) = <|r - g|, |g - b|> / (||r - g|| * ||g - b||)

computed per pixel row of a centred patch.  Two forms are provided:

``ncc`` (default)
    the absolute-difference vectors are mean-centred first (Pearson
    correlation), and anticorrelated rows are floored at 0 so that every
    emitted value lies in [0, 1].  This is the form whose statistics move
    with 4:2:0 preprocessing and compression.
``cosine``
    the formula literally, on the raw nonnegative vectors; values in [0, 1].

Rows where either difference vector has zero norm map to 0.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .imagecore import (
    ImageBuffer,
    center_crop,
    chroma_downsample_420,
    chroma_upsample_420,
    highpass_residual,
    rgb_to_yuv,
    yuv_to_rgb,
)

CHANNELS = ("R", "G", "B")
FORMS = ("ncc", "cosine")

# centre channel -> (outer, centre, outer) plane indices
_TRIPLES = {"R": (1, 0, 2), "G": (0, 1, 2), "B": (0, 2, 1)}


@dataclass(frozen=True)
class ColorCorrFeature:
    center_channel: str
    values: np.ndarray
    filter_id: str = "laplacian3"
    form: str = "ncc"


def _correlate_rows(d1: np.ndarray, d2: np.ndarray, form: str) -> np.ndarray:
    if form == "ncc":
        d1 = d1 - d1.mean(axis=-1, keepdims=True)
        d2 = d2 - d2.mean(axis=-1, keepdims=True)
    elif form != "cosine":
        raise ValueError(f"unknown correlation form {form!r}; choose from {FORMS}")
    n1 = np.sqrt(np.sum(d1 * d1, axis=-1))
    n2 = np.sqrt(np.sum(d2 * d2, axis=-1))
    denom = n1 * n2
    # near-zero norms after centring are rounding residue of constant rows
    tiny = 1e-12 * np.maximum(1.0, np.sqrt(np.sum(d1 * d1 + d2 * d2, axis=-1)))
    ok = (n1 > tiny) & (n2 > tiny)
    out = np.zeros(denom.shape)
    out[ok] = np.sum(d1 * d2, axis=-1)[ok] / denom[ok]
    return np.clip(out, 0.0, 1.0)


def row_color_correlation(r_row, g_row, b_row, form: str = "cosine") -> float:
    """Correlation centred on ``g_row``; the outer rows are interchangeable."""
    r, g, b = (np.asarray(v, dtype=np.float64) for v in (r_row, g_row, b_row))
    if r.ndim != 1 or r.shape != g.shape or g.shape != b.shape or r.size < 1:
        raise ValueError(f"rows must be 1-D with equal nonzero length, got {r.shape}, {g.shape}, {b.shape}")
    return float(_correlate_rows(np.abs(r - g), np.abs(g - b), form))


def residual_correlations(residuals, center: str, form: str = "ncc") -> np.ndarray:
    """Per-row correlation for one centre channel given three residual planes."""
    i, j, k = _TRIPLES[center]
    r, g, b = residuals[i], residuals[j], residuals[k]
    return _correlate_rows(np.abs(r - g), np.abs(g - b), form)


def extract_color_features(
    img: ImageBuffer, patch: int = 512, filter_id: str = "laplacian3", form: str = "ncc"
) -> dict:
    """``{"R": ColorCorrFeature, "G": ..., "B": ...}`` for the centred ``patch x patch`` crop."""
    if img.colorspace != "RGB":
        raise ValueError(f"color features need an RGB image, got {img.colorspace}")
    crop = center_crop(img, patch, patch)
    residuals = [highpass_residual(p, filter_id).values for p in crop.planes]
    return {
        c: ColorCorrFeature(c, residual_correlations(residuals, c, form), filter_id, form)
        for c in CHANNELS
    }


def preprocess_only(img: ImageBuffer, matrix: str = "bt601") -> ImageBuffer:
    """YUV conversion and a 4:2:0 round trip, without any quantization."""
    yuv = chroma_upsample_420(chroma_downsample_420(rgb_to_yuv(img, matrix)))
    return yuv_to_rgb(yuv, matrix)


def write_color_features(path, rows, *, patch: int, filter_id: str, form: str) -> Path:
    """``rows`` is an iterable of ``(image_id, {channel: ColorCorrFeature})``."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["image_id", "center_channel", "row_index", "rho"])
        for image_id, feats in rows:
            for c in CHANNELS:
                if c not in feats:
                    continue
                for i, v in enumerate(feats[c].values):
                    writer.writerow([image_id, c, i, repr(float(v))])
    sidecar = {
        "cue": "color",
        "filter_id": filter_id,
        "patch": patch,
        "form": form,
        "code_version": __version__,
    }
    Path(str(path) + ".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    return path


def read_color_features(path) -> dict:
    """``{image_id: {channel: np.ndarray}}``."""
    out: dict = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.setdefault(row["image_id"], {}).setdefault(row["center_channel"], []).append(
                (int(row["row_index"]), float(row["rho"]))
            )
    return {
        k: {c: np.array([v for _, v in sorted(vals)]) for c, vals in chans.items()}
        for k, chans in out.items()
    }
