# Licensed under a 3-clause BSD style license - see LICENSE.rst
"""
Image decoding and the fixed hash preprocessing chain:

decode -> bilinear resize to 128x128 -> BT.601 YCbCr -> 5x5 Gaussian per plane
"""
import io
from pathlib import Path

import numpy as np
import scipy.ndimage
from PIL import Image, UnidentifiedImageError

__all__ = ['DecodeError', 'RasterImage', 'PlanarYCbCr', 'HASH_SIZE',
           'GAUSS_KERNEL', 'decode_image', 'read_image', 'encode_png',
           'encode_jpeg', 'resize_bilinear', 'gaussian5x5', 'to_ycbcr',
           'from_ycbcr', 'preprocess']

# Side length of the square working image fed to feature extraction
HASH_SIZE = 128

# Sampled (not integrated) Gaussian, sigma=1, offsets -2..2, unit sum
_offsets = np.arange(-2, 3, dtype=np.float64)
GAUSS_KERNEL = np.exp(-_offsets ** 2 / 2.0)
GAUSS_KERNEL /= GAUSS_KERNEL.sum()

# BT.601 full-range coefficients
KR, KG, KB = 0.299, 0.587, 0.114
CB_SCALE = 0.564
CR_SCALE = 0.713

FORMATS = {'png': 'PNG', 'jpeg': 'JPEG', 'jpg': 'JPEG'}
RGB_MODES = ('1', 'L', 'P', 'RGB')
ALPHA_MODES = ('LA', 'PA', 'RGBA')
PNG_SIGNATURE = b'\x89PNG\r\n\x1a\n'


class DecodeError(ValueError):
    pass


class RasterImage(object):
    """8-bit RGB raster.

    Pixel data are held in a ``(height, width, 3)`` uint8 ndarray in
    row-major order.  The array is marked read-only; transforms always
    return a new ``RasterImage``.

    Parameters
    ----------
    data : array-like
        ``(height, width, 3)`` array of values in 0..255
    """
    def __init__(self, data):
        data = np.asarray(data)
        if data.ndim != 3 or data.shape[2] != 3:
            raise ValueError('raster data must have shape (height, width, 3), '
                             'got {}'.format(data.shape))
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise ValueError('raster must be at least 1x1, got {}x{}'
                             .format(data.shape[1], data.shape[0]))
        if data.dtype != np.uint8:
            if np.any((data < 0) | (data > 255)):
                raise ValueError('raster values must be in 0..255')
            data = data.astype(np.uint8)
        data = np.array(data, dtype=np.uint8, order='C', copy=True)
        data.flags.writeable = False
        self.data = data

    width = property(lambda self: self.data.shape[1])
    height = property(lambda self: self.data.shape[0])
    shape = property(lambda self: self.data.shape)

    @classmethod
    def from_pil(cls, im):
        return cls(np.asarray(im.convert('RGB')))

    def to_pil(self):
        return Image.fromarray(self.data)

    def copy_data(self):
        """Writable copy of the pixel array"""
        return self.data.copy()

    def __eq__(self, other):
        if not isinstance(other, RasterImage):
            return NotImplemented
        return np.array_equal(self.data, other.data)

    def __hash__(self):
        return hash((self.data.shape, self.data.tobytes()))

    def __repr__(self):
        return '<RasterImage {}x{}>'.format(self.width, self.height)


class PlanarYCbCr(object):
    """Three real-valued HASH_SIZE x HASH_SIZE planes: luminance Y and
    chrominance Cb, Cr (nominal range 0..255)."""
    def __init__(self, y, cb, cr):
        planes = []
        for name, plane in (('y', y), ('cb', cb), ('cr', cr)):
            plane = np.asarray(plane, dtype=np.float64)
            if plane.shape != (HASH_SIZE, HASH_SIZE):
                raise ValueError('{} plane must be {}x{}, got {}'.format(
                    name, HASH_SIZE, HASH_SIZE, plane.shape))
            if not np.all(np.isfinite(plane)):
                raise ValueError('{} plane has non-finite values'.format(name))
            planes.append(plane)
        self.y, self.cb, self.cr = planes

    @property
    def planes(self):
        return (self.y, self.cb, self.cr)

    def map(self, func):
        """Return new planes with ``func`` applied to each plane"""
        return PlanarYCbCr(*(func(plane) for plane in self.planes))


def _check_png_depth(data):
    # IHDR is always the first chunk: signature(8) len(4) type(4) w(4) h(4) depth(1)
    if data[:8] == PNG_SIGNATURE and len(data) > 24 and data[24] == 16:
        raise DecodeError('16-bit PNG is not supported')


def decode_image(data, format=None):
    """Decode PNG or JPEG bytes into an 8-bit RGB ``RasterImage``.

    Grayscale and paletted images are expanded to RGB, alpha is discarded.

    Parameters
    ----------
    data : bytes
        encoded image stream
    format : str, None
        expected format ('png' or 'jpeg'); None accepts either

    Returns
    -------
    RasterImage
    """
    if format is not None and format.lower() not in FORMATS:
        raise DecodeError('unsupported format {!r}'.format(format))

    data = bytes(data)
    _check_png_depth(data)
    try:
        im = Image.open(io.BytesIO(data))
        if im.format not in ('PNG', 'JPEG'):
            raise DecodeError('unsupported image format {}'.format(im.format))
        if format is not None and FORMATS[format.lower()] != im.format:
            raise DecodeError('expected {} stream, got {}'.format(
                FORMATS[format.lower()], im.format))
        if getattr(im, 'n_frames', 1) > 1:
            raise DecodeError('animated images are not supported')
        im.load()
    except DecodeError:
        raise
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as err:
        raise DecodeError('cannot decode image: {}'.format(err))

    if im.mode in ALPHA_MODES:
        im = im.convert('RGBA')
    elif im.mode not in RGB_MODES:
        raise DecodeError('unsupported color mode {}'.format(im.mode))

    return RasterImage(np.asarray(im.convert('RGB')))


def read_image(path):
    """Read and decode a PNG or JPEG file"""
    return decode_image(Path(path).read_bytes())


def encode_png(img):
    out = io.BytesIO()
    img.to_pil().save(out, format='PNG')
    return out.getvalue()


def encode_jpeg(img, quality):
    """Baseline JPEG with IJG quality ``quality`` and 4:2:0 chroma subsampling.

    Parameters
    ----------
    img : RasterImage
    quality : int
        quality factor 1..100

    Returns
    -------
    bytes
    """
    quality = int(quality)
    if not 1 <= quality <= 100:
        raise ValueError('JPEG quality must be in 1..100, got {}'.format(quality))
    out = io.BytesIO()
    img.to_pil().save(out, format='JPEG', quality=quality, subsampling=2,
                      optimize=False, progressive=False)
    return out.getvalue()


def _round_half_away(vals):
    # Values are non-negative so floor(x + 0.5) rounds ties away from zero
    return np.floor(vals + 0.5)


def resize_bilinear(img, width=HASH_SIZE, height=HASH_SIZE):
    """Bilinear resample with half-pixel-centered sampling.

    Output pixel ``(i, j)`` samples the input at
    ``((i + 0.5) * h_in / h_out - 0.5, (j + 0.5) * w_in / w_out - 0.5)``,
    clamped to the input extent, and is rounded to the nearest integer.
    An input already at the target size is returned unchanged.

    Parameters
    ----------
    img : RasterImage
    width : int
    height : int

    Returns
    -------
    RasterImage
    """
    width, height = int(width), int(height)
    if width < 1 or height < 1:
        raise ValueError('target size must be positive, got {}x{}'.format(width, height))
    if (img.width, img.height) == (width, height):
        return img

    rows = (np.arange(height) + 0.5) * (img.height / height) - 0.5
    cols = (np.arange(width) + 0.5) * (img.width / width) - 0.5
    rows = np.clip(rows, 0, img.height - 1)
    cols = np.clip(cols, 0, img.width - 1)
    coords = np.array(np.meshgrid(rows, cols, indexing='ij'))

    src = img.data.astype(np.float64)
    out = np.empty((height, width, 3), dtype=np.float64)
    for chan in range(3):
        out[:, :, chan] = scipy.ndimage.map_coordinates(src[:, :, chan], coords,
                                                        order=1, mode='nearest')
    out = np.clip(_round_half_away(out), 0, 255)
    return RasterImage(out.astype(np.uint8))


def _gaussian_plane(plane):
    out = scipy.ndimage.correlate1d(plane, GAUSS_KERNEL, axis=0, mode='nearest')
    out = scipy.ndimage.correlate1d(out, GAUSS_KERNEL, axis=1, mode='nearest')
    # A convex combination cannot leave the input range; clamp away rounding
    return np.clip(out, plane.min(), plane.max())


def gaussian5x5(img):
    """Separable 5x5 Gaussian low-pass (sigma=1) with edge replication.

    Parameters
    ----------
    img : ndarray, RasterImage
        2-d plane, ``(h, w, c)`` stack of planes, or a RasterImage

    Returns
    -------
    ndarray
        real-valued filtered array of the same shape
    """
    if isinstance(img, RasterImage):
        img = img.data
    vals = np.asarray(img, dtype=np.float64)
    if vals.ndim == 2:
        return _gaussian_plane(vals)
    if vals.ndim == 3:
        return np.dstack([_gaussian_plane(vals[:, :, i])
                          for i in range(vals.shape[2])])
    raise ValueError('expected 2-d plane or 3-d stack, got {} dims'.format(vals.ndim))


def to_ycbcr(img):
    """ITU-R BT.601 full-range RGB -> YCbCr (real valued, no rounding)"""
    if (img.width, img.height) != (HASH_SIZE, HASH_SIZE):
        raise ValueError('to_ycbcr needs a {0}x{0} image, got {1}x{2}'.format(
            HASH_SIZE, img.width, img.height))
    rgb = img.data.astype(np.float64)
    r, g, b = rgb[:, :, 0], rgb[:, :, 1], rgb[:, :, 2]
    y = KR * r + KG * g + KB * b
    cb = 128.0 + (b - y) * CB_SCALE
    cr = 128.0 + (r - y) * CR_SCALE
    return PlanarYCbCr(y, cb, cr)


def from_ycbcr(planes):
    """Inverse of ``to_ycbcr``; returns a real ``(h, w, 3)`` RGB array"""
    r = planes.y + (planes.cr - 128.0) / CR_SCALE
    b = planes.y + (planes.cb - 128.0) / CB_SCALE
    g = (planes.y - KR * r - KB * b) / KG
    return np.dstack([r, g, b])


def preprocess(img):
    """Resize, convert and low-pass filter ``img`` for feature extraction"""
    return to_ycbcr(resize_bilinear(img)).map(gaussian5x5)
