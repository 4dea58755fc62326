"""Lossy codecs with rate accounting and (optionally) latent exposure."""

from ..imagecore import ImageBuffer
from .base import (
    Codec,
    CodecError,
    CodecResult,
    CodecSettings,
    LatentTensor,
    LatentUnavailableError,
    RateUnavailableError,
    UnsupportedSettingsError,
    entropy_bits,
    read_latent_file,
    round_half_away,
    write_latent_file,
)
from .baseline_dct import BaselineDCTCodec
from .external import ExternalCodec
from .identity import IdentityCodec
from .sim_latent import SimLatentCodec

CODECS = {
    cls.codec_id: cls for cls in (IdentityCodec, BaselineDCTCodec, SimLatentCodec, ExternalCodec)
}


class ChainStepError(CodecError):
    def __init__(self, step: int, cause: Exception):
        super().__init__(f"recompression step {step} failed: {cause}")
        self.step = step


def get_codec(settings: CodecSettings) -> Codec:
    try:
        cls = CODECS[settings.codec_id]
    except KeyError:
        raise UnsupportedSettingsError(
            f"unknown codec {settings.codec_id!r}; available: {sorted(CODECS)}"
        ) from None
    return cls(settings)


def encode_decode(img: ImageBuffer, settings: CodecSettings) -> CodecResult:
    return get_codec(settings).encode_decode(img)


def recompress_chain(img: ImageBuffer, settings: CodecSettings, k: int) -> list:
    """``k`` successive round trips with identical settings; element ``i`` codes element ``i-1``."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    codec = get_codec(settings)
    results = []
    current = img
    for step in range(1, k + 1):
        try:
            result = codec.encode_decode(current)
        except CodecError as exc:
            raise ChainStepError(step, exc) from exc
        results.append(result)
        current = result.decoded
    return results


def analyze(img: ImageBuffer, settings: CodecSettings) -> LatentTensor:
    return get_codec(settings).analyze(img)


__all__ = [
    "CODECS",
    "ChainStepError",
    "Codec",
    "CodecError",
    "CodecResult",
    "CodecSettings",
    "LatentTensor",
    "LatentUnavailableError",
    "RateUnavailableError",
    "UnsupportedSettingsError",
    "analyze",
    "encode_decode",
    "entropy_bits",
    "get_codec",
    "read_latent_file",
    "recompress_chain",
    "round_half_away",
    "write_latent_file",
]
