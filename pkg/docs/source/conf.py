# Configuration file for the Sphinx documentation builder.
#
# https://www.sphinx-doc.org/en/master/usage/configuration.html

# -- Path setup --------------------------------------------------------------

# The package is documented from the source tree, no install needed
import os
import sys
sys.path.insert(0, os.path.abspath('../..'))


# -- Project information -----------------------------------------------------

project = 'robarch'
copyright = '2026, robarch contributors'
author = 'robarch contributors'
release = '0.1.dev0'


# -- General configuration ---------------------------------------------------

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.autosummary',
]
autosummary_generate = True

autodoc_default_options = {
    'members': True,
    'member-order': 'bysource',
}

# protobuf is only needed to read and write snapshots
autodoc_mock_imports = ['google.protobuf']

templates_path = ['_templates']
exclude_patterns = []


# -- Options for HTML output -------------------------------------------------

html_theme = 'alabaster'
html_static_path = ['_static']
