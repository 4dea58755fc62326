"""17-dimensional rate-distortion recompression feature.

The image is recompressed three times with identical settings.  From the
chain we keep the latent and side-information bits of every step, the total
rate in bpp, PSNR against the input and PSNR between consecutive steps, and
four differences of those.
"""

from __future__ import annotations

import csv
import json
from dataclasses import astuple, dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .codecs import CodecSettings, RateUnavailableError, get_codec, recompress_chain
from .imagecore import ImageBuffer, psnr

CHAIN_LENGTH = 3

FEATURE_NAMES = (
    "r_y1", "r_y2", "r_y3",
    "r_z1", "r_z2", "r_z3",
    "r1", "r2", "r3",
    "p_inp2", "p_inp3",
    "p_inc2", "p_inc3",
    "d_r32", "d_r21", "d_pinp", "d_pinc",
)


@dataclass(frozen=True)
class RdFeature:
    r_y1: float
    r_y2: float
    r_y3: float
    r_z1: float
    r_z2: float
    r_z3: float
    r1: float
    r2: float
    r3: float
    p_inp2: float
    p_inp3: float
    p_inc2: float
    p_inc3: float
    d_r32: float
    d_r21: float
    d_pinp: float
    d_pinc: float


assert tuple(f.name for f in fields(RdFeature)) == FEATURE_NAMES


def flatten(feature: RdFeature) -> np.ndarray:
    return np.array(astuple(feature), dtype=np.float64)


def unflatten(vector) -> RdFeature:
    vector = np.asarray(vector, dtype=np.float64).ravel()
    if vector.size != len(FEATURE_NAMES):
        raise ValueError(f"expected {len(FEATURE_NAMES)} values, got {vector.size}")
    return RdFeature(*(float(v) for v in vector))


def features_from_chain(img: ImageBuffer, chain) -> RdFeature:
    """Assemble the feature from an input image and its 3-step recompression chain."""
    if len(chain) != CHAIN_LENGTH:
        raise ValueError(f"need a chain of {CHAIN_LENGTH} results, got {len(chain)}")
    if not all(res.rates_reported for res in chain):
        raise RateUnavailableError("codec reports only total sizes; latent/hyperprior rates are required")
    pixels = float(img.height * img.width)
    r_y = [float(res.bits_y) for res in chain]
    r_z = [float(res.bits_z) for res in chain]
    r = [(a + b) / pixels for a, b in zip(r_y, r_z)]
    decoded = [res.decoded for res in chain]
    p_inp = [psnr(img, d) for d in decoded]
    p_inc = [psnr(img, decoded[0])] + [psnr(decoded[k - 1], decoded[k]) for k in (1, 2)]
    return RdFeature(
        *r_y, *r_z, *r,
        p_inp[1], p_inp[2],
        p_inc[1], p_inc[2],
        r[2] - r[1], r[1] - r[0], p_inp[2] - p_inp[1], p_inc[2] - p_inc[1],
    )


def extract_rd_features(img: ImageBuffer, settings: CodecSettings) -> RdFeature:
    codec = get_codec(settings)
    if not codec.reports_rates:
        raise RateUnavailableError(f"codec {settings.codec_id!r} does not report latent/hyperprior rates")
    return features_from_chain(img, recompress_chain(img, settings, CHAIN_LENGTH))


def write_rd_features(path, rows, *, settings: CodecSettings) -> Path:
    """``rows`` is an iterable of ``(image_id, RdFeature)``; one CSV row each."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["image_id", "codec_id", "strength", *FEATURE_NAMES])
        for image_id, feat in rows:
            writer.writerow([image_id, settings.codec_id, repr(float(settings.strength)),
                             *(repr(float(v)) for v in flatten(feat))])
    sidecar = {
        "cue": "rd",
        "codec": settings.describe(),
        "chain_length": CHAIN_LENGTH,
        "psnr_space": "rgb",  # PSNR over all RGB samples
        "code_version": __version__,
    }
    Path(str(path) + ".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    return path


def read_rd_features(path) -> dict:
    """``{image_id: RdFeature}``."""
    out = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out[row["image_id"]] = unflatten([float(row[n]) for n in FEATURE_NAMES])
    return out
