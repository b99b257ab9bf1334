# Licensed under a 3-clause BSD style license - see LICENSE.rst
import sys

from . import clogging

logger = clogging.config_logger('rohash', stream=sys.stderr, level=clogging.INFO)

from .imageprep import *
from .robust_hash import *
from .matcher import *
from .manipulation import *
from .forge import *
from .metrics import *
from .files import files

try:
    import ska_helpers
    __version__ = ska_helpers.get_version(__package__)
except ImportError:
    from importlib.metadata import version, PackageNotFoundError
    try:
        __version__ = version(__package__)
    except PackageNotFoundError:
        __version__ = '0.0.0'


def test(*args, **kwargs):
    """Run py.test unit tests.

    Parameters
    ----------
    *args :
        extra pytest command line arguments
    **kwargs :
        passed to ``pytest.main``

    Returns
    -------
    int
        pytest exit code
    """
    import os
    import pytest
    pkg_dir = os.path.dirname(os.path.abspath(__file__))
    return pytest.main([pkg_dir] + list(args), **kwargs)
