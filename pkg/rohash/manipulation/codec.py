# Licensed under a 3-clause BSD style license - see LICENSE.rst
"""
Global (whole image) manipulations: JPEG recompression and rescaling.
"""
import numpy as np

from ..imageprep import decode_image, encode_jpeg, resize_bilinear
from .base import Manipulation, round_half_up

__all__ = ['InvalidScale', 'jpeg_recompress', 'resize_scale',
           'JpegRecompress', 'Resize']


class InvalidScale(ValueError):
    pass


def jpeg_recompress(img, quality):
    """Encode ``img`` as baseline JPEG at ``quality`` and decode it again"""
    return decode_image(encode_jpeg(img, quality), format='jpeg')


def resize_scale(img, scale):
    """Bilinear resample to ``(round(w * scale), round(h * scale))``.

    Parameters
    ----------
    img : RasterImage
    scale : float
        scale factor > 0

    Returns
    -------
    RasterImage
    """
    scale = float(scale)
    if not np.isfinite(scale) or scale <= 0:
        raise InvalidScale('scale must be a positive number, got {}'.format(scale))
    width = round_half_up(img.width * scale)
    height = round_half_up(img.height * scale)
    if width < 1 or height < 1:
        raise InvalidScale('scale {} turns {}x{} into an empty {}x{} image'.format(
            scale, img.width, img.height, width, height))
    return resize_bilinear(img, width, height)


class JpegRecompress(Manipulation):
    """JPEG recompression at IJG quality ``quality``"""
    kind = 'jpeg'

    def __init__(self, quality=70):
        super(JpegRecompress, self).__init__()
        self.add_par('quality', int(quality), min=1, max=100)

    def apply(self, img, seed=0, donor=None):
        return jpeg_recompress(img, self.quality)


class Resize(Manipulation):
    """Bilinear rescale by ``scale``"""
    kind = 'resize'

    def __init__(self, scale=0.5):
        super(Resize, self).__init__()
        scale = float(scale)
        if not np.isfinite(scale) or scale <= 0:
            raise InvalidScale('scale must be a positive number, got {}'.format(scale))
        self.add_par('scale', scale)

    def apply(self, img, seed=0, donor=None):
        return resize_scale(img, self.scale)
