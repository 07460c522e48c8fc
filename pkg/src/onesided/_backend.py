"""Kernel backend selection.

The compiled extension is used when it imports; set
``ONESIDED_PURE_PYTHON=1`` to force the numpy fallback.
"""

import os

from . import _kernels_py

kernels = _kernels_py
compiled = None

if os.environ.get("ONESIDED_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels_c as compiled
    except ImportError:  # extension not built
        compiled = None
    else:
        kernels = compiled

BACKEND = kernels.NAME


def available():
    """Mapping of backend name to kernel module for every importable backend."""
    out = {"numpy": _kernels_py}
    if compiled is not None:
        out["cython"] = compiled
    return out
