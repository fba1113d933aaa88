"""Kernel backend selection.

The compiled ``_kernels`` extension is used when importable, unless
``ALHARNESS_PURE_PYTHON=1`` is set.  ``NAME`` records which one is active.
"""
from __future__ import annotations

import os

from . import _kernels_py

kernels = _kernels_py
NAME = "python"

if os.environ.get("ALHARNESS_PURE_PYTHON") != "1":
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        kernels = _compiled
        NAME = "cython"


def get(name: str):
    """Return a specific backend module by name (``"python"`` or ``"cython"``)."""
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown backend {name!r}")
