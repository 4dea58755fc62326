"""8x8 block-DCT codec in the style of baseline JPEG.

YCbCr (full-range BT.601), 4:2:0 chroma, IJG quality scaling of the Annex K
tables, order-0 entropy estimate instead of Huffman coding.
"""

import math

import numpy as np

from ..imagecore import (
    ImageBuffer,
    downsample_plane,
    rgb_to_yuv_array,
    upsample_plane,
    yuv_to_rgb_array,
)
from ._blocks import block_dct, block_idct, pad_to_multiple
from .base import Codec, CodecResult, UnsupportedSettingsError, entropy_bits, require_rgb8, round_half_away

LUMA_TABLE = np.array(
    [
        [16, 11, 10, 16, 24, 40, 51, 61],
        [12, 12, 14, 19, 26, 58, 60, 55],
        [14, 13, 16, 24, 40, 57, 69, 56],
        [14, 17, 22, 29, 51, 87, 80, 62],
        [18, 22, 37, 56, 68, 109, 103, 77],
        [24, 35, 55, 64, 81, 104, 113, 92],
        [49, 64, 78, 87, 103, 121, 120, 101],
        [72, 92, 95, 98, 112, 100, 103, 99],
    ],
    dtype=np.float64,
)

CHROMA_TABLE = np.array(
    [
        [17, 18, 24, 47, 99, 99, 99, 99],
        [18, 21, 26, 66, 99, 99, 99, 99],
        [24, 26, 56, 99, 99, 99, 99, 99],
        [47, 66, 99, 99, 99, 99, 99, 99],
        [99, 99, 99, 99, 99, 99, 99, 99],
        [99, 99, 99, 99, 99, 99, 99, 99],
        [99, 99, 99, 99, 99, 99, 99, 99],
        [99, 99, 99, 99, 99, 99, 99, 99],
    ],
    dtype=np.float64,
)

BLOCK = 8


def scaled_table(table: np.ndarray, quality: int) -> np.ndarray:
    """IJG quality scaling, entries clamped to 1..255."""
    quality = int(quality)
    scale = 5000 / quality if quality < 50 else 200 - 2 * quality
    return np.clip(np.floor((table * scale + 50) / 100), 1, 255)


class BaselineDCTCodec(Codec):
    codec_id = "baseline_dct"

    def validate(self, settings):
        q = settings.strength
        if not (1 <= q <= 100) or int(q) != q:
            raise UnsupportedSettingsError(f"baseline_dct quality must be an integer in 1..100, got {q}")
        self.quality = int(q)
        self.matrix = settings.options.get("matrix", "bt601")
        self.tables = (
            scaled_table(LUMA_TABLE, self.quality).reshape(-1, 1, 1),
            scaled_table(CHROMA_TABLE, self.quality).reshape(-1, 1, 1),
        )

    def encode_decode(self, img: ImageBuffer) -> CodecResult:
        require_rgb8(img)
        h, w = img.height, img.width
        yuv = rgb_to_yuv_array(img.as_float(), self.matrix)
        planes = [yuv[..., 0], downsample_plane(yuv[..., 1]), downsample_plane(yuv[..., 2])]

        bits = 0.0
        recon = []
        for idx, plane in enumerate(planes):
            table = self.tables[0] if idx == 0 else self.tables[1]
            padded = pad_to_multiple(plane - 128.0, BLOCK)
            q = round_half_away(block_dct(padded, BLOCK) / table)
            dc = q[0].ravel()
            bits += entropy_bits(np.diff(dc, prepend=0.0)) + entropy_bits(q[1:])
            rec = block_idct(q * table, BLOCK) + 128.0
            recon.append(rec[: plane.shape[0], : plane.shape[1]])

        out = np.stack(
            [recon[0], upsample_plane(recon[1], (h, w)), upsample_plane(recon[2], (h, w))], axis=-1
        )
        rgb = yuv_to_rgb_array(out, self.matrix)
        decoded = ImageBuffer.from_array(np.clip(np.floor(rgb + 0.5), 0, 255).astype(np.uint8))
        return CodecResult(decoded=decoded, bits_y=math.ceil(bits), bits_z=0, source_size=(h, w))
