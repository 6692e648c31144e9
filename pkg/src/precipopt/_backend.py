"""Select the compiled kernels when available.

Set ``PRECIPOPT_BACKEND=python`` to force the numpy fallback (used by the
backend-equivalence tests and the benchmark).
"""

import os

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None


def compiled_available() -> bool:
    return _compiled is not None


def get(name=None):
    """Return the kernel module for ``name`` ("compiled", "python" or None for the default)."""
    name = name or os.environ.get("PRECIPOPT_BACKEND", "auto")
    if name == "python":
        return _kernels_py
    if name == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not built")
        return _compiled
    if name != "auto":
        raise ValueError(f"unknown backend {name!r}")
    return _compiled if _compiled is not None else _kernels_py


def active_name() -> str:
    return "compiled" if get() is _compiled else "python"
