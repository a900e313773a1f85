"""Kernel selection.

The compiled extension is used when importable. Setting
``ODTQ_PURE_PYTHON=1`` forces the pure-Python kernels.
"""
import os

from . import _kernels_py


def _select():
    if os.environ.get("ODTQ_PURE_PYTHON", "").strip() not in ("", "0"):
        return _kernels_py
    try:
        from . import _kernels
    except ImportError:
        return _kernels_py
    return _kernels


kernels = _select()
BACKEND = kernels.NAME
