# Licensed under a 3-clause BSD style license - see LICENSE.rst
from .base import *
from .codec import *
from .tamper import *
