# -*- coding: utf-8 -*-
#
# rohash documentation build configuration file.
#
# This file is execfile()d with the current directory set to its
# containing dir.
# Licensed under a 3-clause BSD style license - see LICENSE.rst

import sys
import os

# Modules to document with autodoc live one level up
sys.path.insert(0, os.path.abspath('..'))
from rohash import __version__

# -- General configuration ------------------------------------------------

autosummary_generate = True

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.intersphinx',
    'sphinx.ext.viewcode',
    'numpydoc',
]

# Don't show summaries of the members in each class along with the
# class' docstring
numpydoc_show_class_members = False

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

# General information about the project.
project = u'rohash'
copyright = u'2024, rohash developers'

# The short X.Y version.
version = __version__
# The full version, including alpha/beta/rc tags.
release = __version__

exclude_patterns = ['_build']
pygments_style = 'sphinx'

# -- Options for HTML output ----------------------------------------------

html_theme = 'alabaster'
html_static_path = []
htmlhelp_basename = 'rohashdoc'

intersphinx_mapping = {'python': ('https://docs.python.org/3', None),
                       'numpy': ('https://numpy.org/doc/stable/', None),
                       'astropy': ('https://docs.astropy.org/en/stable/', None)}
