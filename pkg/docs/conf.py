#!/usr/bin/env python
# -*- coding: utf-8 -*-

try:
    from meshconflict import __version__
except ImportError:
    __version__ = "dev"


extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.intersphinx",
    "sphinx.ext.napoleon",
    "sphinx.ext.mathjax",
    "myst_nb",
]
master_doc = "index"
# autodoc_mock_imports = []

project = "meshconflict"
copyright = "2022 meshconflict developers"
version = __version__
release = __version__

exclude_patterns = ["_build"]
html_theme = "sphinx_book_theme"
html_title = "meshconflict"
html_show_sourcelink = False
html_theme_options = {
    "path_to_docs": "docs",
    "repository_url": "https://github.com/meshconflict/meshconflict",
    "repository_branch": "main",
    "use_edit_page_button": True,
    "use_issues_button": True,
    "use_repository_button": True,
}
intersphinx_mapping = {
    "python": ("https://docs.python.org/3", None),
    "networkx": ("https://networkx.org/documentation/stable", None),
}
