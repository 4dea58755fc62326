"""Codec settings, results, latent tensors and shared quantizer helpers."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from ..imagecore import ImageBuffer

LATENT_MAGIC = b"LAT1"


class CodecError(RuntimeError):
    """A codec failed or was asked for something it cannot do."""


class UnsupportedSettingsError(CodecError, ValueError):
    pass


class LatentUnavailableError(CodecError):
    """The codec does not expose its latent representation."""


class RateUnavailableError(CodecError):
    """The codec does not report separate latent/hyperprior rates."""


@dataclass(frozen=True)
class CodecSettings:
    """Which codec to run and how hard.

    ``strength`` is a JPEG quality for ``baseline_dct``, the global quantizer
    step for ``sim_latent`` and a bitrate in bpp for ``external``.
    ``options`` carries codec-specific knobs (block size, command line, ...).
    """

    codec_id: str
    strength: float = 0.0
    deterministic_seed: int = 0
    options: dict = field(default_factory=dict)

    def describe(self) -> dict:
        return {
            "codec_id": self.codec_id,
            "strength": self.strength,
            "seed": self.deterministic_seed,
            "options": dict(sorted(self.options.items())),
        }


@dataclass(frozen=True)
class LatentTensor:
    values: np.ndarray  # C x H' x W'

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 3 or values.shape[0] < 1:
            raise ValueError(f"latent must be C x H' x W' with C >= 1, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("latent contains non-finite values")
        object.__setattr__(self, "values", values)

    @property
    def channels(self) -> int:
        return self.values.shape[0]

    @property
    def spatial(self) -> tuple:
        return self.values.shape[1:]


@dataclass(frozen=True)
class CodecResult:
    decoded: ImageBuffer
    bits_y: int
    bits_z: int
    latent: Optional[LatentTensor] = None
    source_size: tuple = (0, 0)  # (h, w)
    rates_reported: bool = True

    def __post_init__(self):
        if self.bits_y < 0 or self.bits_z < 0:
            raise ValueError("bit counts must be non-negative")
        h, w = self.source_size
        if (self.decoded.height, self.decoded.width) != (h, w):
            raise ValueError(
                f"decoded size {self.decoded.height}x{self.decoded.width} differs from source {h}x{w}"
            )

    @property
    def bpp(self) -> float:
        h, w = self.source_size
        return (self.bits_y + self.bits_z) / float(h * w)


def round_half_away(x) -> np.ndarray:
    """Nearest integer, ties away from zero."""
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def entropy_bits(symbols) -> float:
    """Order-0 Shannon code length of a symbol stream, in bits."""
    symbols = np.asarray(symbols).ravel()
    if symbols.size == 0:
        return 0.0
    _, counts = np.unique(symbols, return_counts=True)
    p = counts / symbols.size
    return float(-np.sum(counts * np.log2(p)))


def write_latent_file(path, latent) -> Path:
    """``LAT1`` little-endian header (C, H', W') then float32 channel-major data."""
    values = np.asarray(latent.values if isinstance(latent, LatentTensor) else latent)
    if values.ndim != 3:
        raise ValueError("latent array must be 3-D")
    c, h, w = values.shape
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(LATENT_MAGIC + struct.pack("<III", c, h, w))
        fh.write(np.ascontiguousarray(values, dtype="<f4").tobytes())
    return path


def read_latent_file(path) -> LatentTensor:
    data = Path(path).read_bytes()
    if len(data) < 16 or data[:4] != LATENT_MAGIC:
        raise CodecError(f"{path}: not a LAT1 latent file")
    c, h, w = struct.unpack("<III", data[4:16])
    expected = 16 + 4 * c * h * w
    if len(data) != expected:
        raise CodecError(f"{path}: expected {expected} bytes for {c}x{h}x{w} latent, found {len(data)}")
    values = np.frombuffer(data, dtype="<f4", offset=16).reshape(c, h, w)
    return LatentTensor(values.astype(np.float64))


class Codec:
    """Base class; subclasses implement ``encode_decode`` and optionally ``analyze``."""

    codec_id = "abstract"
    deterministic = True
    exposes_latent = False
    reports_rates = True

    def __init__(self, settings: CodecSettings):
        self.settings = settings
        self.validate(settings)

    def validate(self, settings: CodecSettings) -> None:
        pass

    def encode_decode(self, img: ImageBuffer) -> CodecResult:
        raise NotImplementedError

    def analyze(self, img: ImageBuffer) -> LatentTensor:
        """Unquantized latent ``y`` of ``img``."""
        raise LatentUnavailableError(f"codec {self.codec_id!r} does not expose latents")


def require_rgb8(img: ImageBuffer) -> None:
    if img.colorspace != "RGB" or not img.is_8bit:
        raise UnsupportedSettingsError("codecs operate on 8-bit RGB images")
