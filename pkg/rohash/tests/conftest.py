# Licensed under a 3-clause BSD style license - see LICENSE.rst
import sys

import pytest

from .. import clogging
from ..forge import gen_synthetic

CORPUS_SEED = 20240601


@pytest.fixture(autouse=True)
def rohash_logger():
    yield
    # CLI tests point the handler at capture streams that are closed afterwards
    clogging.config_logger('rohash', stream=sys.stderr, level=clogging.INFO)


@pytest.fixture(scope='session')
def corpus200():
    images, manifest = gen_synthetic(200, seed=CORPUS_SEED)
    return images


@pytest.fixture(scope='session')
def corpus8():
    images, manifest = gen_synthetic(8, seed=CORPUS_SEED)
    return images
