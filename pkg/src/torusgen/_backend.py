"""Kernel backend selection.

The compiled extension is preferred.  Set ``TORUSGEN_BACKEND=python`` to force
the pure-Python fallback, or ``compiled`` to fail loudly when the extension is
missing.
"""
import os

from . import _pykernels

_requested = os.environ.get("TORUSGEN_BACKEND", "auto").lower()

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

if _requested == "python" or (_requested == "auto" and _compiled is None):
    kernels = _pykernels
    BACKEND = "python"
elif _compiled is None:
    raise ImportError("TORUSGEN_BACKEND=compiled but torusgen._kernels is not built")
else:
    kernels = _compiled
    BACKEND = "compiled"


def get_kernels(name):
    """Return the kernel module called ``name`` ('python' or 'compiled')."""
    if name == "python":
        return _pykernels
    if name == "compiled":
        if _compiled is None:
            raise ImportError("compiled kernels are not available")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def available_backends():
    return ["python"] + (["compiled"] if _compiled is not None else [])
