"""Procedural test images: textures, noise, and decoder-synthesized images."""

from __future__ import annotations

import numpy as np

from ..imagecore import ImageBuffer, upsample_plane


def _shape(size):
    return (int(size), int(size)) if np.isscalar(size) else tuple(int(s) for s in size)


def _to_uint8(values: np.ndarray) -> np.ndarray:
    return np.clip(np.floor(values + 0.5), 0, 255).astype(np.uint8)


def _band_fields(rng, shape, sigmas, weights, count):
    """``count`` periodic Gaussian random fields.

    The amplitude spectrum is a weighted sum of Gaussian lowpass responses,
    each normalised to unit output variance for white-noise input.
    """
    h, w = shape
    fy = np.fft.fftfreq(h)[:, None]
    fx = np.fft.rfftfreq(w)[None, :]
    f2 = fy**2 + fx**2
    # rfft bins other than DC / Nyquist columns stand for two full-spectrum bins
    mult = np.full(f2.shape, 2.0)
    mult[:, 0] = 1.0
    if w % 2 == 0:
        mult[:, -1] = 1.0
    transfer = np.zeros(f2.shape)
    for s, wt in zip(sigmas, weights):
        resp = np.exp(-2.0 * np.pi**2 * s**2 * f2)
        transfer += wt * resp / np.sqrt(np.sum(mult * resp**2) / (h * w))
    out = np.empty((count, h, w))
    # complex noise carries variance 2 per bin; irfft2 divides by h*w
    scale = np.sqrt(h * w / 2.0)
    for i in range(count):
        noise = rng.standard_normal(f2.shape) + 1j * rng.standard_normal(f2.shape)
        out[i] = scale * np.fft.irfft2(noise * transfer, s=shape)
    return out


def textured_image(size=512, seed=0) -> ImageBuffer:
    """Multi-scale filtered noise: shared luminance structure, per-channel detail, a colour ramp."""
    rng = np.random.default_rng(seed)
    h, w = _shape(size)
    scales = (0.6, 1.5, 4.0, 12.0, 32.0)
    slope = rng.uniform(0.4, 1.2)
    base = _band_fields(rng, (h, w), scales, [s**slope for s in scales], 1)[0]
    base /= base.std()
    detail_amp = rng.uniform(0.4, 1.0)
    detail = _band_fields(rng, (h, w), (0.5, 1.0, 3.0), (1.0, 1.0, 1.5), 3)
    channels = [
        rng.uniform(0.7, 1.1) * base + detail_amp * d / d.std() for d in detail
    ]
    img = np.stack(channels, axis=-1)
    gain = rng.uniform(18.0, 45.0)
    angle = rng.uniform(0, 2 * np.pi)
    yy, xx = np.mgrid[0:h, 0:w] / max(h, w)
    ramp = (np.cos(angle) * xx + np.sin(angle) * yy)[..., None] * rng.uniform(-40, 40, size=3)
    img = 128.0 + rng.uniform(-20, 20, size=3) + gain * img + ramp
    return ImageBuffer.from_array(_to_uint8(img))


def noise_image(size=256, seed=0, amplitude=48.0) -> ImageBuffer:
    """Gaussian white noise around mid-grey, independent per channel."""
    rng = np.random.default_rng(seed)
    h, w = _shape(size)
    return ImageBuffer.from_array(_to_uint8(128.0 + amplitude * rng.standard_normal((h, w, 3))))


def decoder_synthesized_image(size=256, seed=0, detail=(4.0, 16.0)) -> ImageBuffer:
    """A decoder-style image: half-resolution random content upsampled 2x, plus synthesized detail.

    The low-resolution content plays the role of an unquantized latent; the
    bilinear 2x upsampling and the added fine-scale texture play the decoder.
    Nothing along the way is quantized except the final 8-bit output.
    """
    rng = np.random.default_rng(seed)
    h, w = _shape(size)
    low = textured_image((h // 2 + 1, w // 2 + 1), seed=int(rng.integers(2**31))).as_float()
    up = np.stack([upsample_plane(low[..., c], (h + 2, w + 2))[1:-1, 1:-1] for c in range(3)], axis=-1)
    amp = rng.uniform(*detail)
    fields = _band_fields(rng, (h, w), (0.7,), (1.0,), 4)
    shared, per_channel = fields[0], fields[1:]
    texture = shared[..., None] + 0.3 * np.moveaxis(per_channel, 0, -1)
    return ImageBuffer.from_array(_to_uint8(up + amp * texture))
