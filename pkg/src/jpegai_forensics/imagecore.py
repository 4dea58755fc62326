"""Planar images, the YUV/4:2:0 color pipeline, cropping, residuals and PSNR.

Samples are either 8-bit (``uint8``, range 0..255) or unit-scaled floats
(range 0..1).  Every operation returns a new buffer; inputs are never mutated.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

__all__ = [
    "ImageBuffer",
    "ResidualPlane",
    "ColorspaceError",
    "YUV_MATRICES",
    "HIGHPASS_KERNELS",
    "PSNR_CAP",
    "rgb_to_yuv",
    "yuv_to_rgb",
    "chroma_downsample_420",
    "chroma_upsample_420",
    "downsample_plane",
    "upsample_plane",
    "rgb_to_yuv_array",
    "yuv_to_rgb_array",
    "center_crop",
    "psnr",
    "highpass_residual",
    "read_image",
    "write_image",
]

COLORSPACES = ("RGB", "YUV444", "YUV420")
PSNR_CAP = 100.0

# (Kr, Kb) luma weights; full-range conversion for all of them.
YUV_MATRICES = {
    "bt601": (0.299, 0.114),
    "bt709": (0.2126, 0.0722),
    "bt2020": (0.2627, 0.0593),
}

HIGHPASS_KERNELS = {
    "laplacian3": np.array([[0, -1, 0], [-1, 4, -1], [0, -1, 0]], dtype=np.float64),
    "kv3": np.array([[-1, 2, -1], [2, -4, 2], [-1, 2, -1]], dtype=np.float64) / 4.0,
    "kv5": np.array(
        [
            [-1, 2, -2, 2, -1],
            [2, -6, 8, -6, 2],
            [-2, 8, -12, 8, -2],
            [2, -6, 8, -6, 2],
            [-1, 2, -2, 2, -1],
        ],
        dtype=np.float64,
    )
    / 12.0,
}
_KERNEL_SCALE = {"laplacian3": 1.0, "kv3": 4.0, "kv5": 12.0}


class ColorspaceError(ValueError):
    """An operation received an image in the wrong color space."""


@dataclass(frozen=True, eq=False)
class ImageBuffer:
    """Planar image.

    ``planes`` holds one 2-D array per channel.  For ``YUV420`` the two chroma
    planes are ``ceil(h/2) x ceil(w/2)``; otherwise all planes share one shape.
    """

    planes: tuple
    colorspace: str = "RGB"

    def __post_init__(self):
        planes = tuple(np.asarray(p) for p in self.planes)
        object.__setattr__(self, "planes", planes)
        if self.colorspace not in COLORSPACES:
            raise ColorspaceError(f"unknown colorspace {self.colorspace!r}")
        if len(planes) != 3:
            raise ValueError(f"expected 3 planes, got {len(planes)}")
        dtypes = {p.dtype for p in planes}
        if len(dtypes) != 1:
            raise ValueError(f"planes have mixed dtypes {sorted(map(str, dtypes))}")
        dtype = planes[0].dtype
        if dtype != np.uint8 and not np.issubdtype(dtype, np.floating):
            raise ValueError(f"samples must be uint8 or float, got {dtype}")
        for p in planes:
            if p.ndim != 2:
                raise ValueError("every plane must be 2-D")
        h, w = planes[0].shape
        if self.colorspace == "YUV420":
            expected = [(h, w), ((h + 1) // 2, (w + 1) // 2), ((h + 1) // 2, (w + 1) // 2)]
        else:
            expected = [(h, w)] * 3
        if [p.shape for p in planes] != expected:
            raise ValueError(f"plane shapes {[p.shape for p in planes]} invalid for {self.colorspace}")
        if np.issubdtype(dtype, np.floating):
            for p in planes:
                if not np.all(np.isfinite(p)) or p.min() < 0.0 or p.max() > 1.0:
                    raise ValueError("float samples must lie in [0, 1]")

    @classmethod
    def from_array(cls, array, colorspace: str = "RGB") -> "ImageBuffer":
        """Build from an ``H x W x 3`` array."""
        array = np.asarray(array)
        if array.ndim != 3 or array.shape[2] != 3:
            raise ValueError(f"expected H x W x 3 array, got shape {array.shape}")
        return cls(tuple(array[..., c].copy() for c in range(3)), colorspace)

    def to_array(self) -> np.ndarray:
        if self.colorspace == "YUV420":
            raise ColorspaceError("YUV420 planes have different sizes; upsample first")
        return np.stack(self.planes, axis=-1)

    @property
    def height(self) -> int:
        return self.planes[0].shape[0]

    @property
    def width(self) -> int:
        return self.planes[0].shape[1]

    @property
    def is_8bit(self) -> bool:
        return self.planes[0].dtype == np.uint8

    @property
    def max_value(self) -> float:
        return 255.0 if self.is_8bit else 1.0

    def as_float(self) -> np.ndarray:
        """Samples as float64 on the 0..255 scale (RGB/YUV444 only)."""
        return self.to_array().astype(np.float64) * (255.0 / self.max_value)

    def __eq__(self, other):
        if not isinstance(other, ImageBuffer):
            return NotImplemented
        return (
            self.colorspace == other.colorspace
            and all(a.dtype == b.dtype and a.shape == b.shape and np.array_equal(a, b)
                    for a, b in zip(self.planes, other.planes))
        )

    __hash__ = None


@dataclass(frozen=True)
class ResidualPlane:
    values: np.ndarray
    filter_id: str


def _require(img: ImageBuffer, colorspace: str) -> None:
    if img.colorspace != colorspace:
        raise ColorspaceError(f"expected {colorspace} image, got {img.colorspace}")


def _yuv_matrix(matrix: str) -> np.ndarray:
    try:
        kr, kb = YUV_MATRICES[matrix]
    except KeyError:
        raise ValueError(f"unknown YUV matrix {matrix!r}; choose from {sorted(YUV_MATRICES)}") from None
    kg = 1.0 - kr - kb
    return np.array(
        [
            [kr, kg, kb],
            [-0.5 * kr / (1.0 - kb), -0.5 * kg / (1.0 - kb), 0.5],
            [0.5, -0.5 * kg / (1.0 - kr), -0.5 * kb / (1.0 - kr)],
        ]
    )


def rgb_to_yuv_array(rgb: np.ndarray, matrix: str = "bt601", offset: float = 128.0) -> np.ndarray:
    """Float RGB (``H x W x 3``) to YUV with chroma offset; no rounding or clipping."""
    yuv = rgb @ _yuv_matrix(matrix).T
    yuv[..., 1:] += offset
    return yuv


def yuv_to_rgb_array(yuv: np.ndarray, matrix: str = "bt601", offset: float = 128.0) -> np.ndarray:
    centered = np.array(yuv, dtype=np.float64, copy=True)
    centered[..., 1:] -= offset
    return centered @ np.linalg.inv(_yuv_matrix(matrix)).T


def _finish(values: np.ndarray, as_8bit: bool) -> np.ndarray:
    if as_8bit:
        return np.clip(np.floor(values + 0.5), 0, 255).astype(np.uint8)
    return np.clip(values, 0.0, 1.0)


def rgb_to_yuv(img: ImageBuffer, matrix: str = "bt601") -> ImageBuffer:
    """Full-range RGB to YUV444 (chroma offset 128, or 0.5 for float samples)."""
    _require(img, "RGB")
    offset = 128.0 if img.is_8bit else 0.5
    yuv = rgb_to_yuv_array(img.to_array().astype(np.float64), matrix, offset)
    return ImageBuffer.from_array(_finish(yuv, img.is_8bit), "YUV444")


def yuv_to_rgb(img: ImageBuffer, matrix: str = "bt601") -> ImageBuffer:
    _require(img, "YUV444")
    offset = 128.0 if img.is_8bit else 0.5
    rgb = yuv_to_rgb_array(img.to_array().astype(np.float64), matrix, offset)
    return ImageBuffer.from_array(_finish(rgb, img.is_8bit), "RGB")


def downsample_plane(plane: np.ndarray) -> np.ndarray:
    """2x2 block mean; edge blocks average only the samples they contain."""
    plane = np.asarray(plane, dtype=np.float64)
    h, w = plane.shape
    hh, ww = (h + 1) // 2, (w + 1) // 2
    sums = np.zeros((hh, ww))
    counts = np.zeros((hh, ww))
    for dy in (0, 1):
        for dx in (0, 1):
            part = plane[dy::2, dx::2]
            sums[: part.shape[0], : part.shape[1]] += part
            counts[: part.shape[0], : part.shape[1]] += 1
    return sums / counts


def upsample_plane(plane: np.ndarray, shape: tuple) -> np.ndarray:
    """Bilinear 2x upsampling with chroma samples co-sited at even positions.

    Output sample ``2i`` equals input sample ``i``; odd samples interpolate
    their two neighbours; positions past the last input sample repeat it.
    """
    plane = np.asarray(plane, dtype=np.float64)
    out_h, out_w = shape

    def axis_weights(n_out, n_in):
        pos = np.arange(n_out) / 2.0
        lo = np.minimum(np.floor(pos).astype(int), n_in - 1)
        hi = np.minimum(lo + 1, n_in - 1)
        frac = np.where(hi > lo, pos - lo, 0.0)
        return lo, hi, frac

    y0, y1, fy = axis_weights(out_h, plane.shape[0])
    x0, x1, fx = axis_weights(out_w, plane.shape[1])
    rows = plane[y0] * (1.0 - fy)[:, None] + plane[y1] * fy[:, None]
    return rows[:, x0] * (1.0 - fx)[None, :] + rows[:, x1] * fx[None, :]


def chroma_downsample_420(img: ImageBuffer) -> ImageBuffer:
    _require(img, "YUV444")
    y, u, v = img.planes
    chroma = [_finish(downsample_plane(c), img.is_8bit) for c in (u, v)]
    return ImageBuffer((y.copy(), *chroma), "YUV420")


def chroma_upsample_420(img: ImageBuffer) -> ImageBuffer:
    _require(img, "YUV420")
    y, u, v = img.planes
    chroma = [_finish(upsample_plane(c, y.shape), img.is_8bit) for c in (u, v)]
    return ImageBuffer((y.copy(), *chroma), "YUV444")


def center_crop(img: ImageBuffer, w: int, h: int) -> ImageBuffer:
    """Crop anchored at ``((W - w) // 2, (H - h) // 2)``."""
    if img.colorspace == "YUV420":
        raise ColorspaceError("crop before chroma subsampling")
    if img.width < w or img.height < h:
        raise ValueError(f"image of size {img.width}x{img.height} is smaller than crop {w}x{h}")
    x0 = (img.width - w) // 2
    y0 = (img.height - h) // 2
    return ImageBuffer(tuple(p[y0 : y0 + h, x0 : x0 + w].copy() for p in img.planes), img.colorspace)


def psnr(a: ImageBuffer, b: ImageBuffer) -> float:
    """PSNR over all samples of all channels; zero MSE returns ``PSNR_CAP``."""
    if a.colorspace != b.colorspace:
        raise ColorspaceError(f"colorspace mismatch: {a.colorspace} vs {b.colorspace}")
    if [p.shape for p in a.planes] != [p.shape for p in b.planes]:
        raise ValueError(f"dimension mismatch: {a.width}x{a.height} vs {b.width}x{b.height}")
    if a.is_8bit != b.is_8bit:
        raise ValueError("cannot compare 8-bit and float images")
    sq = sum(float(np.sum((pa.astype(np.float64) - pb.astype(np.float64)) ** 2))
             for pa, pb in zip(a.planes, b.planes))
    mse = sq / sum(p.size for p in a.planes)
    if mse == 0.0:
        return PSNR_CAP
    return float(min(PSNR_CAP, 10.0 * np.log10(a.max_value**2 / mse)))


def highpass_residual(plane, filter_id: str = "laplacian3") -> ResidualPlane:
    """Correlate ``plane`` with a zero-sum highpass kernel (symmetric padding)."""
    try:
        kernel = HIGHPASS_KERNELS[filter_id]
    except KeyError:
        raise ValueError(f"unknown filter {filter_id!r}; choose from {sorted(HIGHPASS_KERNELS)}") from None
    plane = np.asarray(plane, dtype=np.float64)
    if plane.ndim != 2:
        raise ValueError("residuals are computed on 2-D planes")
    if plane.shape[0] < kernel.shape[0] or plane.shape[1] < kernel.shape[1]:
        raise ValueError(f"plane {plane.shape} smaller than {filter_id} kernel {kernel.shape}")
    # integer taps first, scale last: a constant plane then gives exact zeros
    scale = _KERNEL_SCALE[filter_id]
    # scipy's "reflect" repeats the edge sample: (d c b a | a b c d).
    values = ndimage.correlate(plane, kernel * scale, mode="reflect")
    return ResidualPlane(values / scale if scale != 1.0 else values, filter_id)


def read_image(path) -> ImageBuffer:
    """Read an 8-bit RGB PNG or PPM."""
    from PIL import Image

    with Image.open(path) as im:
        if im.mode not in ("RGB", "L", "RGBA", "P"):
            raise ValueError(f"{path}: unsupported image mode {im.mode}")
        arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
    return ImageBuffer.from_array(arr)


def write_image(img: ImageBuffer, path) -> Path:
    """Write an 8-bit RGB image; format follows the suffix (.png, .ppm)."""
    from PIL import Image

    _require(img, "RGB")
    if not img.is_8bit:
        raise ValueError("only 8-bit images can be written")
    path = Path(path)
    if path.suffix.lower() not in (".png", ".ppm"):
        raise ValueError(f"{path}: only .png and .ppm are supported")
    Image.fromarray(img.to_array(), "RGB").save(path)
    return path
