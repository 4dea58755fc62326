import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from jpegai_forensics.imagecore import (
    HIGHPASS_KERNELS,
    ColorspaceError,
    ImageBuffer,
    center_crop,
    chroma_downsample_420,
    chroma_upsample_420,
    downsample_plane,
    highpass_residual,
    psnr,
    read_image,
    rgb_to_yuv,
    upsample_plane,
    write_image,
    yuv_to_rgb,
)


def pixel(rgb, colorspace="RGB"):
    return ImageBuffer.from_array(np.array(rgb, dtype=np.uint8).reshape(1, 1, 3), colorspace)


def solid(value, h=4, w=4, colorspace="RGB"):
    return ImageBuffer.from_array(np.full((h, w, 3), value, dtype=np.uint8), colorspace)


rgb8 = arrays(np.uint8, st.tuples(st.integers(1, 9), st.integers(1, 9), st.just(3)))


class TestImageBuffer:
    def test_rejects_out_of_range_float(self):
        with pytest.raises(ValueError):
            ImageBuffer.from_array(np.full((2, 2, 3), 1.5))

    def test_yuv420_shapes(self):
        y = np.zeros((5, 7), np.uint8)
        c = np.zeros((3, 4), np.uint8)
        img = ImageBuffer((y, c, c), "YUV420")
        assert (img.height, img.width) == (5, 7)
        with pytest.raises(ValueError):
            ImageBuffer((y, y, y), "YUV420")

    def test_unknown_colorspace(self):
        with pytest.raises(ColorspaceError):
            solid(0, colorspace="HSV")


class TestColorConversion:
    @pytest.mark.parametrize(
        "rgb, yuv",
        [((0, 0, 0), (0, 128, 128)), ((255, 255, 255), (255, 128, 128)), ((128, 128, 128), (128, 128, 128))],
    )
    def test_examples(self, rgb, yuv):
        assert tuple(rgb_to_yuv(pixel(rgb)).to_array()[0, 0]) == yuv
        assert tuple(yuv_to_rgb(pixel(yuv, "YUV444")).to_array()[0, 0]) == rgb

    def test_float_offset(self):
        img = ImageBuffer.from_array(np.full((1, 1, 3), 0.25))
        out = rgb_to_yuv(img).to_array()[0, 0]
        np.testing.assert_allclose(out, [0.25, 0.5, 0.5], atol=1e-12)

    def test_wrong_colorspace(self):
        with pytest.raises(ColorspaceError):
            rgb_to_yuv(solid(3, colorspace="YUV444"))
        with pytest.raises(ColorspaceError):
            yuv_to_rgb(solid(3))

    def test_round_trip_exhaustive_sample(self):
        # 2^18 random colours covering the cube
        rng = np.random.default_rng(0)
        arr = rng.integers(0, 256, size=(512, 512, 3), dtype=np.uint8)
        back = yuv_to_rgb(rgb_to_yuv(ImageBuffer.from_array(arr))).to_array()
        assert np.abs(back.astype(int) - arr).max() <= 1

    @given(rgb8)
    @settings(max_examples=60, deadline=None)
    def test_round_trip_property(self, arr):
        back = yuv_to_rgb(rgb_to_yuv(ImageBuffer.from_array(arr))).to_array()
        assert np.abs(back.astype(int) - arr).max() <= 1

    def test_alternate_matrix(self):
        arr = np.random.default_rng(1).integers(0, 256, (8, 8, 3), dtype=np.uint8)
        img = ImageBuffer.from_array(arr)
        assert not np.array_equal(rgb_to_yuv(img, "bt709").to_array(), rgb_to_yuv(img).to_array())
        back = yuv_to_rgb(rgb_to_yuv(img, "bt709"), "bt709").to_array()
        assert np.abs(back.astype(int) - arr).max() <= 1


class TestChroma:
    def test_block_mean(self):
        np.testing.assert_array_equal(downsample_plane(np.array([[10, 20], [30, 40]])), [[25]])

    def test_three_by_three_oracle(self):
        p = np.arange(9, dtype=float).reshape(3, 3)
        expected = np.array([[(0 + 1 + 3 + 4) / 4, (2 + 5) / 2], [(6 + 7) / 2, 8]])
        np.testing.assert_allclose(downsample_plane(p), expected)

    def test_ramp_upsample(self):
        np.testing.assert_allclose(upsample_plane(np.array([[0.0, 100.0]]), (1, 4)), [[0, 50, 100, 100]])

    def test_constant_round_trip(self):
        img = rgb_to_yuv(solid((90, 140, 30), 5, 7))
        down = chroma_downsample_420(img)
        assert down.planes[1].shape == (3, 4)
        assert np.all(down.planes[1] == img.planes[1][0, 0])
        assert chroma_upsample_420(down) == img

    @given(st.integers(1, 12), st.integers(1, 12), st.integers(0, 255), st.integers(0, 255))
    @settings(max_examples=40, deadline=None)
    def test_constant_chroma_identity(self, h, w, u, v):
        rng = np.random.default_rng(h * 100 + w)
        y = rng.integers(0, 256, (h, w), dtype=np.uint8)
        img = ImageBuffer((y, np.full((h, w), u, np.uint8), np.full((h, w), v, np.uint8)), "YUV444")
        assert chroma_upsample_420(chroma_downsample_420(img)) == img

    def test_wrong_colorspace(self):
        with pytest.raises(ColorspaceError):
            chroma_downsample_420(solid(1))
        with pytest.raises(ColorspaceError):
            chroma_upsample_420(solid(1, colorspace="YUV444"))


class TestCrop:
    def test_identity(self):
        img = ImageBuffer.from_array(np.random.default_rng(0).integers(0, 256, (16, 16, 3), dtype=np.uint8))
        assert center_crop(img, 16, 16) == img

    def test_offsets(self):
        arr = np.arange(48, dtype=np.uint8).reshape(4, 4, 3)
        out = center_crop(ImageBuffer.from_array(arr), 2, 2).to_array()
        np.testing.assert_array_equal(out, arr[1:3, 1:3])

    def test_anchor_511(self):
        arr = np.zeros((511, 511, 3), np.uint8)
        arr[127, 127] = 200
        out = center_crop(ImageBuffer.from_array(arr), 256, 256).to_array()
        assert out[0, 0, 0] == 200 and out.shape == (256, 256, 3)

    def test_too_small_names_sizes(self):
        with pytest.raises(ValueError, match=r"4x4.*8x8"):
            center_crop(solid(0), 8, 8)


class TestPsnr:
    def test_identical_cap(self):
        assert psnr(solid(7), solid(7)) == 100.0

    def test_offset_16(self):
        assert psnr(solid(0), solid(16)) == pytest.approx(10 * np.log10(255**2 / 256), abs=1e-12)
        assert psnr(solid(0), solid(16)) == pytest.approx(24.05, abs=0.01)

    @given(rgb8, st.integers(0, 2**31))
    @settings(max_examples=40, deadline=None)
    def test_symmetric_nonnegative(self, arr, seed):
        other = np.random.default_rng(seed).integers(0, 256, arr.shape, dtype=np.uint8)
        a, b = ImageBuffer.from_array(arr), ImageBuffer.from_array(other)
        assert psnr(a, b) == psnr(b, a) >= 0

    def test_strictly_decreasing_in_mse(self):
        vals = [psnr(solid(0), solid(d)) for d in (1, 2, 5, 40)]
        assert all(x > y for x, y in zip(vals, vals[1:]))

    def test_mismatch(self):
        with pytest.raises(ValueError):
            psnr(solid(0, 4, 4), solid(0, 4, 5))


def naive_correlate(plane, kernel):
    kh, kw = kernel.shape
    ph, pw = kh // 2, kw // 2
    padded = np.pad(plane, ((ph, ph), (pw, pw)), mode="symmetric")
    out = np.zeros_like(plane, dtype=float)
    for i in range(plane.shape[0]):
        for j in range(plane.shape[1]):
            acc = 0.0
            for a in range(kh):
                for b in range(kw):
                    acc += kernel[a, b] * padded[i + a, j + b]
            out[i, j] = acc
    return out


class TestHighpass:
    @pytest.mark.parametrize("fid", sorted(HIGHPASS_KERNELS))
    def test_constant_is_zero(self, fid):
        assert np.all(highpass_residual(np.full((9, 9), 37.0), fid).values == 0)

    def test_impulse_reproduces_flipped_kernel(self):
        plane = np.zeros((7, 7))
        plane[3, 3] = 1
        res = highpass_residual(plane).values
        np.testing.assert_array_equal(res[2:5, 2:5], HIGHPASS_KERNELS["laplacian3"][::-1, ::-1])

    @pytest.mark.parametrize("fid", sorted(HIGHPASS_KERNELS))
    def test_matches_naive_oracle(self, fid):
        plane = np.random.default_rng(3).normal(size=(5, 6)) * 50
        np.testing.assert_allclose(highpass_residual(plane, fid).values, naive_correlate(plane, HIGHPASS_KERNELS[fid]), rtol=1e-9, atol=1e-9)

    @given(arrays(np.float64, (6, 6), elements=st.floats(-100, 100)), arrays(np.float64, (6, 6), elements=st.floats(-100, 100)))
    @settings(max_examples=40, deadline=None)
    def test_linear(self, a, b):
        np.testing.assert_allclose(
            highpass_residual(a + b).values, highpass_residual(a).values + highpass_residual(b).values, atol=1e-9
        )

    def test_too_small(self):
        with pytest.raises(ValueError):
            highpass_residual(np.zeros((2, 5)))
        with pytest.raises(ValueError):
            highpass_residual(np.zeros((5, 5)), "nope")


@pytest.mark.parametrize("suffix", [".png", ".ppm"])
def test_image_io_round_trip(tmp_path, suffix):
    arr = np.random.default_rng(0).integers(0, 256, (9, 11, 3), dtype=np.uint8)
    img = ImageBuffer.from_array(arr)
    path = write_image(img, tmp_path / f"x{suffix}")
    assert read_image(path) == img


def test_write_rejects_lossy_suffix(tmp_path):
    with pytest.raises(ValueError):
        write_image(solid(0), tmp_path / "x.jpg")
