"""Kernel backend selection.

The compiled module is used when it imports; ``LOOMKIT_BACKEND=python``
forces the numpy fallback.  ``LOOMKIT_THREADS`` caps the worker count of
the compiled kernels.
"""
import logging
import os

from . import _kernels_py

log = logging.getLogger(__name__)


def _load_compiled():
    try:
        from . import _kernels
    except ImportError:
        return None
    return _kernels


compiled = _load_compiled()

if os.environ.get("LOOMKIT_BACKEND", "").lower() == "python" or compiled is None:
    kernels = _kernels_py
else:
    kernels = compiled

BACKEND = kernels.NAME


def get(name=None):
    """Kernel module by name (``"cython"`` or ``"python"``); active one by default."""
    if name is None:
        return kernels
    if name == "python":
        return _kernels_py
    if name == "cython":
        if compiled is None:
            raise ImportError("compiled kernels are not built")
        return compiled
    raise ValueError(f"unknown backend {name!r}")


def threads() -> int:
    n = os.cpu_count() or 1
    cap = os.environ.get("LOOMKIT_THREADS")
    if cap:
        try:
            n = max(1, min(n, int(cap)))
        except ValueError:
            log.warning("ignoring non-integer LOOMKIT_THREADS=%r", cap)
    return n
