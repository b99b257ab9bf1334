# Licensed under a 3-clause BSD style license - see LICENSE.rst
import io

import numpy as np
import pytest
from PIL import Image

from ..imageprep import (DecodeError, RasterImage, PlanarYCbCr, HASH_SIZE,
                         GAUSS_KERNEL, decode_image, encode_png, encode_jpeg,
                         resize_bilinear, gaussian5x5, to_ycbcr, from_ycbcr,
                         preprocess, read_image)


def random_image(seed, width=64, height=48):
    rng = np.random.default_rng(seed)
    return RasterImage(rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8))


def pil_bytes(im, format):
    out = io.BytesIO()
    im.save(out, format=format)
    return out.getvalue()


def test_raster_is_read_only():
    img = random_image(1)
    assert (img.width, img.height) == (64, 48)
    with pytest.raises(ValueError):
        img.data[0, 0, 0] = 1
    data = img.copy_data()
    data[0, 0, 0] = 1
    assert data.flags.writeable


@pytest.mark.parametrize('shape', [(4, 4), (4, 4, 4), (0, 3, 3)])
def test_raster_bad_shape(shape):
    with pytest.raises(ValueError):
        RasterImage(np.zeros(shape, dtype=np.uint8))


def test_raster_out_of_range():
    with pytest.raises(ValueError, match='0..255'):
        RasterImage(np.full((2, 2, 3), 256))


def test_png_decode_is_lossless(tmp_path):
    img = random_image(2)
    data = encode_png(img)
    assert decode_image(data) == img
    assert decode_image(data, format='png') == img
    path = tmp_path / 'img.png'
    path.write_bytes(data)
    assert read_image(path) == img


def test_grayscale_expands_to_rgb():
    gray = np.arange(64, dtype=np.uint8).reshape(8, 8) * 3
    img = decode_image(pil_bytes(Image.fromarray(gray), 'PNG'))
    for chan in range(3):
        assert np.all(img.data[:, :, chan] == gray)


def test_alpha_is_discarded():
    rgba = np.zeros((4, 4, 4), dtype=np.uint8)
    rgba[..., 0] = 200
    rgba[..., 3] = 7
    img = decode_image(pil_bytes(Image.fromarray(rgba), 'PNG'))
    assert img.shape == (4, 4, 3)
    assert np.all(img.data[..., 0] == 200)
    assert np.all(img.data[..., 1:] == 0)


def test_decode_errors():
    with pytest.raises(DecodeError):
        decode_image(b'not an image at all')
    with pytest.raises(DecodeError, match='16-bit'):
        decode_image(pil_bytes(Image.new('I;16', (4, 4)), 'PNG'))
    with pytest.raises(DecodeError, match='unsupported image format'):
        decode_image(pil_bytes(Image.new('RGB', (4, 4)), 'GIF'))
    png = encode_png(random_image(3))
    with pytest.raises(DecodeError, match='expected JPEG'):
        decode_image(png, format='jpeg')
    with pytest.raises(DecodeError):
        decode_image(png[:40])


def test_jpeg_roundtrip_and_quality_range():
    img = random_image(4)
    out = decode_image(encode_jpeg(img, 90), format='jpeg')
    assert out.shape == img.shape
    for quality in (0, 101):
        with pytest.raises(ValueError):
            encode_jpeg(img, quality)


def test_resize_same_size_is_identity():
    img = random_image(5, 128, 128)
    assert resize_bilinear(img) is img


def test_resize_constant_and_dims():
    img = RasterImage(np.full((37, 91, 3), 113, dtype=np.uint8))
    out = resize_bilinear(img)
    assert out.shape == (HASH_SIZE, HASH_SIZE, 3)
    assert np.all(out.data == 113)
    out = resize_bilinear(random_image(6), width=10, height=20)
    assert (out.width, out.height) == (10, 20)


def bilinear_oracle(src, i, j, height, width):
    """Output pixel (i, j) of a half-pixel-centred bilinear resample of
    ``src`` to ``height`` x ``width``, one pixel at a time"""
    h_in, w_in = src.shape[:2]
    y = min(max((i + 0.5) * h_in / height - 0.5, 0), h_in - 1)
    x = min(max((j + 0.5) * w_in / width - 0.5, 0), w_in - 1)
    y0, x0 = int(np.floor(y)), int(np.floor(x))
    y1, x1 = min(y0 + 1, h_in - 1), min(x0 + 1, w_in - 1)
    fy, fx = y - y0, x - x0
    return (src[y0, x0] * (1 - fy) * (1 - fx) + src[y0, x1] * (1 - fy) * fx
            + src[y1, x0] * fy * (1 - fx) + src[y1, x1] * fy * fx)


def test_resize_matches_half_pixel_oracle():
    img = random_image(7, 9, 7)
    out = resize_bilinear(img, width=5, height=4)
    src = img.data.astype(float)
    for i in range(4):
        for j in range(5):
            val = bilinear_oracle(src, i, j, 4, 5)
            assert np.all(np.abs(out.data[i, j].astype(float) - val) <= 0.5 + 1e-9)


def test_resize_ramp_sample_pixels():
    ramp = np.repeat(np.arange(256, dtype=np.uint8)[np.newaxis, :], 256, axis=0)
    img = RasterImage(np.dstack([ramp] * 3))
    out = resize_bilinear(img)
    assert np.all(np.diff(out.data[0, :, 0].astype(int)) >= 0)
    assert np.all(out.data == out.data[:1])

    src = img.data.astype(float)
    rng = np.random.default_rng(12)
    for i, j in rng.integers(0, HASH_SIZE, size=(16, 2)):
        val = bilinear_oracle(src, i, j, HASH_SIZE, HASH_SIZE)
        assert np.all(np.abs(out.data[i, j].astype(float) - val) <= 0.5 + 1e-9)
        # Half-pixel centres sample 2j + 0.5, which rounds away from zero
        assert np.all(out.data[i, j] == 2 * j + 1)



def test_gaussian_kernel():
    assert np.isclose(GAUSS_KERNEL.sum(), 1.0)
    assert np.allclose(GAUSS_KERNEL, GAUSS_KERNEL[::-1])
    assert np.argmax(GAUSS_KERNEL) == 2


def test_gaussian_preserves_constant():
    plane = np.full((HASH_SIZE, HASH_SIZE), 77.3)
    assert np.all(gaussian5x5(plane) == 77.3)


def test_gaussian_smooths_impulse():
    plane = np.zeros((9, 9))
    plane[4, 4] = 1.0
    out = gaussian5x5(plane)
    assert np.isclose(out.sum(), 1.0)
    assert np.allclose(out[2:7, 2:7], np.outer(GAUSS_KERNEL, GAUSS_KERNEL))
    stack = gaussian5x5(random_image(8))
    assert stack.shape == (48, 64, 3)


def test_gaussian_stays_in_input_range():
    rng = np.random.default_rng(13)
    plane = rng.uniform(-20, 300, size=(HASH_SIZE, HASH_SIZE))
    out = gaussian5x5(plane)
    assert out.min() >= plane.min() and out.max() <= plane.max()
    stack = gaussian5x5(random_image(14))
    data = random_image(14).data
    for chan in range(3):
        assert stack[:, :, chan].min() >= data[:, :, chan].min()
        assert stack[:, :, chan].max() <= data[:, :, chan].max()


def test_gaussian_lowers_checkerboard_variance():
    yy, xx = np.mgrid[0:HASH_SIZE, 0:HASH_SIZE]
    plane = np.where((yy + xx) % 2 == 0, 255.0, 0.0)
    out = gaussian5x5(plane)
    assert out.var() < plane.var()
    assert out.var() < 0.1 * plane.var()


def test_ycbcr_gray_and_inverse():
    img = random_image(9, HASH_SIZE, HASH_SIZE)
    planes = to_ycbcr(img)
    assert np.allclose(from_ycbcr(planes), img.data)

    gray = RasterImage(np.full((HASH_SIZE, HASH_SIZE, 3), 90, dtype=np.uint8))
    planes = to_ycbcr(gray)
    assert np.allclose(planes.y, 90)
    assert np.allclose(planes.cb, 128)
    assert np.allclose(planes.cr, 128)

    with pytest.raises(ValueError):
        to_ycbcr(random_image(10))


def test_ycbcr_pure_red():
    red = RasterImage(np.full((HASH_SIZE, HASH_SIZE, 3), (255, 0, 0), dtype=np.uint8))
    planes = to_ycbcr(red)
    assert np.allclose(planes.y, 76.245, rtol=0, atol=1e-9)
    assert np.allclose(planes.cb, 128 - 76.245 * 0.564, rtol=0, atol=1e-9)
    assert np.allclose(planes.cr, 128 + 178.755 * 0.713, rtol=0, atol=1e-9)



def test_planar_validation():
    with pytest.raises(ValueError):
        PlanarYCbCr(np.zeros((4, 4)), np.zeros((4, 4)), np.zeros((4, 4)))
    bad = np.zeros((HASH_SIZE, HASH_SIZE))
    bad[0, 0] = np.nan
    with pytest.raises(ValueError, match='non-finite'):
        PlanarYCbCr(bad, bad, bad)


def test_preprocess():
    planes = preprocess(random_image(11, 300, 200))
    for plane in planes.planes:
        assert plane.shape == (HASH_SIZE, HASH_SIZE)
        assert np.all(np.isfinite(plane))
