"""Average Fourier spectra of highpass residuals and a block-grid peak score."""

from __future__ import annotations

import numpy as np

from ..imagecore import ImageBuffer, highpass_residual, rgb_to_yuv_array


def _luma(img: ImageBuffer) -> np.ndarray:
    if img.colorspace == "RGB":
        return rgb_to_yuv_array(img.as_float())[..., 0]
    return img.as_float()[..., 0]


def _magnitudes(images, filter_id: str, rectify: bool):
    images = list(images)
    if not images:
        raise ValueError("need at least one image")
    shape = (images[0].height, images[0].width)
    for img in images:
        if (img.height, img.width) != shape:
            raise ValueError(f"all images must share one size; got {img.height}x{img.width} and {shape[0]}x{shape[1]}")
        res = highpass_residual(_luma(img), filter_id).values
        if rectify:
            # |r| turns block-periodic variance into a periodic mean
            res = np.abs(res)
        yield np.abs(np.fft.fft2(res))


def mean_magnitude_spectrum(images, filter_id: str = "laplacian3", rectify: bool = False) -> np.ndarray:
    """Mean linear |DFT| of the luma residuals, DC at index (0, 0)."""
    total, n = None, 0
    for mag in _magnitudes(images, filter_id, rectify):
        total = mag if total is None else total + mag
        n += 1
    return total / n


def avg_fourier_spectrum(images, filter_id: str = "laplacian3", rectify: bool = False) -> np.ndarray:
    """Mean of log(1 + |centred DFT of the luma residual|) over ``images``, scaled to [0, 1].

    With ``rectify`` the DFT is taken of the absolute residual instead.
    Independent per-block errors only modulate the residual variance, which a
    linear spectrum cannot see; rectification makes that grid visible.
    """
    total, n = None, 0
    for mag in _magnitudes(images, filter_id, rectify):
        m = np.log1p(np.fft.fftshift(mag))
        total = m if total is None else total + m
        n += 1
    avg = total / n
    lo, hi = avg.min(), avg.max()
    if hi - lo <= 1e-12 * max(1.0, hi):
        return np.zeros_like(avg)
    return (avg - lo) / (hi - lo)


def grid_peak_ratio(spectrum: np.ndarray, period: int = 8, radius: int = 2) -> float:
    """Mean ratio of magnitude at block-grid frequencies to its local surroundings.

    ``spectrum`` is an uncentred linear magnitude map (see
    ``mean_magnitude_spectrum``).  Grid bins are the multiples of N/period
    along each axis, DC excluded.  Each peak is compared with the mean of the
    ``(2*radius+1)^2`` window around it, minus the peak bin itself.  Values
    near 1 mean no grid; a block codec pushes it well above.
    """
    s = np.asarray(spectrum, dtype=np.float64)
    h, w = s.shape
    rows = np.unique(np.round(np.arange(period) * h / period).astype(int) % h)
    cols = np.unique(np.round(np.arange(period) * w / period).astype(int) % w)
    offsets = [(dy, dx) for dy in range(-radius, radius + 1) for dx in range(-radius, radius + 1) if (dy, dx) != (0, 0)]
    ratios = []
    for r in rows:
        for c in cols:
            if r == 0 and c == 0:
                continue
            bg = np.mean([s[(r + dy) % h, (c + dx) % w] for dy, dx in offsets])
            if bg > 0:
                ratios.append(s[r, c] / bg)
    return float(np.mean(ratios)) if ratios else 0.0
