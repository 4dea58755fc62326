"""A transform codec that behaves like a learned codec where the cues look.

Analysis: RGB -> YUV -> 4:2:0, then a non-overlapping block DCT whose
coefficients become latent channels: ``p*p`` luma channels from ``p x p``
blocks and ``(p/2)**2`` channels per chroma plane from ``p/2 x p/2`` blocks of
the half-resolution chroma, all on one ``H/p x W/p`` grid.  Each channel is
divided by ``step * weight[c]`` and rounded to integers.  The side channel
``z`` is a coarse log-energy map of ``y``; both streams are rate-estimated
with per-channel order-0 entropy.  Synthesis is the exact inverse.
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
from .base import (
    Codec,
    CodecResult,
    LatentTensor,
    UnsupportedSettingsError,
    entropy_bits,
    require_rgb8,
    round_half_away,
)

PRESETS = {
    "default": {"block": 8, "chroma_group": 1},
    # 16x16 luma blocks (256 channels) plus 2 x 64 chroma channels summed in
    # pairs -> 320 exposed latent channels.
    "c320": {"block": 16, "chroma_group": 2},
}

MAX_STEP = 4096.0
HYPER_POOL = 4


def channel_weights(block: int, slope: float = 0.5, chroma_factor: float = 1.5) -> np.ndarray:
    """Per-channel step multipliers, growing with spatial frequency."""
    scale = 8.0 / block
    u, v = np.meshgrid(np.arange(block), np.arange(block), indexing="ij")
    luma = 1.0 + slope * (u + v).ravel() * scale
    half = block // 2
    cu, cv = np.meshgrid(np.arange(half), np.arange(half), indexing="ij")
    # a chroma frequency index spans the same picture extent as the luma one
    chroma = chroma_factor * (1.0 + slope * (cu + cv).ravel() * scale)
    return np.concatenate([luma, chroma, chroma])


class SimLatentCodec(Codec):
    codec_id = "sim_latent"
    exposes_latent = True

    def validate(self, settings):
        preset = settings.options.get("preset", "default")
        if preset not in PRESETS:
            raise UnsupportedSettingsError(f"unknown sim_latent preset {preset!r}")
        opts = dict(PRESETS[preset])
        opts.update({k: v for k, v in settings.options.items() if k in ("block", "chroma_group")})
        step = float(settings.strength)
        if not (0.0 < step <= MAX_STEP) or not math.isfinite(step):
            raise UnsupportedSettingsError(f"sim_latent step must be in (0, {MAX_STEP}], got {settings.strength}")
        block = int(opts["block"])
        if block < 2 or block % 2:
            raise UnsupportedSettingsError(f"block size must be an even integer >= 2, got {block}")
        group = int(opts["chroma_group"])
        if group < 1 or ((block // 2) ** 2) % group:
            raise UnsupportedSettingsError(f"chroma_group {group} does not divide {(block // 2) ** 2} channels")
        self.step = step
        self.block = block
        self.chroma_group = group
        self.matrix = settings.options.get("matrix", "bt601")
        self.scale = step * channel_weights(
            block, settings.options.get("slope", 0.5), settings.options.get("chroma_factor", 1.5)
        )[:, None, None]

    @property
    def channels(self) -> int:
        return self.block**2 + 2 * (self.block // 2) ** 2

    @property
    def latent_channels(self) -> int:
        return self.block**2 + 2 * (self.block // 2) ** 2 // self.chroma_group

    # -- transforms ---------------------------------------------------------

    def _coefficients(self, img: ImageBuffer) -> np.ndarray:
        rgb = img.as_float()
        b = self.block
        padded = np.stack([pad_to_multiple(rgb[..., c], b) for c in range(3)], axis=-1)
        yuv = rgb_to_yuv_array(padded, self.matrix)
        luma = block_dct(yuv[..., 0] - 128.0, b)
        chroma = [block_dct(downsample_plane(yuv[..., c]) - 128.0, b // 2) for c in (1, 2)]
        return np.concatenate([luma, *chroma], axis=0)

    def _synthesize(self, coeffs: np.ndarray, size: tuple) -> ImageBuffer:
        b = self.block
        n_luma = b * b
        n_chroma = (b // 2) ** 2
        luma = block_idct(coeffs[:n_luma], b) + 128.0
        chroma = [
            upsample_plane(block_idct(coeffs[n_luma + i * n_chroma : n_luma + (i + 1) * n_chroma], b // 2) + 128.0,
                           luma.shape)
            for i in (0, 1)
        ]
        rgb = yuv_to_rgb_array(np.stack([luma, *chroma], axis=-1), self.matrix)
        h, w = size
        rgb = rgb[:h, :w]
        return ImageBuffer.from_array(np.clip(np.floor(rgb + 0.5), 0, 255).astype(np.uint8))

    def _expose(self, y: np.ndarray) -> LatentTensor:
        if self.chroma_group == 1:
            return LatentTensor(y)
        n_luma = self.block**2
        chroma = y[n_luma:]
        grouped = chroma.reshape(-1, self.chroma_group, *chroma.shape[1:]).sum(axis=1)
        return LatentTensor(np.concatenate([y[:n_luma], grouped], axis=0))

    def latent_to_image(self, y: np.ndarray, size: tuple) -> ImageBuffer:
        """Synthesis of an (ungrouped) latent in step units, without quantization."""
        y = np.asarray(y, dtype=np.float64)
        if y.shape[0] != self.channels:
            raise ValueError(f"expected {self.channels} latent channels, got {y.shape[0]}")
        return self._synthesize(y * self.scale, size)

    def hyperprior(self, y: np.ndarray) -> np.ndarray:
        """Quantized log2-energy of ``y`` per component, pooled over 4x4 latent positions."""
        n_luma = self.block**2
        n_chroma = (self.block // 2) ** 2
        groups = [y[:n_luma], y[n_luma : n_luma + n_chroma], y[n_luma + n_chroma :]]
        maps = []
        for g in groups:
            energy = pad_to_multiple(np.mean(g**2, axis=0), HYPER_POOL)
            hh, ww = energy.shape
            pooled = energy.reshape(hh // HYPER_POOL, HYPER_POOL, ww // HYPER_POOL, HYPER_POOL).mean(axis=(1, 3))
            maps.append(round_half_away(2.0 * np.log2(1.0 + pooled)))
        return np.stack(maps)

    # -- codec interface ----------------------------------------------------

    def analyze(self, img: ImageBuffer) -> LatentTensor:
        require_rgb8(img)
        return self._expose(self._coefficients(img) / self.scale)

    def encode_decode(self, img: ImageBuffer) -> CodecResult:
        require_rgb8(img)
        y = self._coefficients(img) / self.scale
        q = round_half_away(y)
        bits_y = sum(entropy_bits(q[c]) for c in range(q.shape[0]))
        bits_z = entropy_bits(self.hyperprior(y))
        decoded = self._synthesize(q * self.scale, (img.height, img.width))
        return CodecResult(
            decoded=decoded,
            bits_y=math.ceil(bits_y),
            bits_z=math.ceil(bits_z),
            latent=self._expose(y),
            source_size=(img.height, img.width),
        )
