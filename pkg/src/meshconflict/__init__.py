# -*- coding: utf-8 -*-

__all__ = ["main", "__version__"]

try:
    from .meshconflict_version import version as __version__
except ImportError:  # pragma: no cover
    __version__ = "dev"

from .cli import main  # noqa: E402
