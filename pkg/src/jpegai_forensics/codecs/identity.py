"""Lossless pass-through codec used as a fixed point in tests."""

from ..imagecore import ImageBuffer
from .base import Codec, CodecResult, require_rgb8


class IdentityCodec(Codec):
    codec_id = "identity"

    def encode_decode(self, img: ImageBuffer) -> CodecResult:
        require_rgb8(img)
        return CodecResult(
            decoded=ImageBuffer(tuple(p.copy() for p in img.planes), "RGB"),
            bits_y=24 * img.height * img.width,
            bits_z=0,
            source_size=(img.height, img.width),
        )
