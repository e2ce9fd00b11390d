"""Kernel backend chosen at import: compiled extension if built, else pure Python.

Set ``DUALCAUSAL_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pykernels

python_kernels = _pykernels

compiled_kernels = None
if os.environ.get("DUALCAUSAL_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as compiled_kernels
    except ImportError:
        compiled_kernels = None

kernels = compiled_kernels if compiled_kernels is not None else python_kernels
BACKEND = kernels.BACKEND


def get(name=None):
    """Kernel module by name ("cython" or "python"); default is the active one."""
    if name is None:
        return kernels
    if name == "python":
        return python_kernels
    if name == "cython":
        if compiled_kernels is None:
            raise ImportError("compiled kernels are not built")
        return compiled_kernels
    raise ValueError(f"unknown backend {name!r}")
