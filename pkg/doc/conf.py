#!/usr/bin/env python3
# -*- coding: utf-8 -*-
#
# stcsim documentation build configuration file.
#
# This file is execfile()d with the current directory set to its
# containing dir.

# -- General configuration ------------------------------------------------

extensions = ['sphinxcontrib.httpdomain']

templates_path = ['_templates']

source_suffix = '.rst'

master_doc = 'index'

project = 'stcsim'
copyright = '2026, the stcsim developers'
author = 'the stcsim developers'

version = '1.0'
release = '1.0'

language = None

exclude_patterns = ['_build']

pygments_style = 'sphinx'

todo_include_todos = False


# -- Options for HTML output ----------------------------------------------

html_theme = 'alabaster'

html_static_path = ['_static']

htmlhelp_basename = 'stcsimdoc'


# -- Options for LaTeX output ---------------------------------------------

latex_elements = {}

latex_documents = [
    (master_doc, 'stcsim.tex', 'stcsim Documentation', author, 'manual'),
]


# -- Options for manual page output ---------------------------------------

man_pages = [
    (master_doc, 'stcsim', 'stcsim Documentation', [author], 1)
]
