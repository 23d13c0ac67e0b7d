"""Pick the compiled kernels when available, else the numpy fallback.

Set ``EVENTRECON_PURE_PYTHON=1`` to force the fallback.
"""

import importlib
import logging
import os

from . import _fallback

log = logging.getLogger(__name__)


def load(name):
    """Return the kernel module called ``name`` ("compiled" or "python")."""
    if name == "python":
        return _fallback
    if name == "compiled":
        return importlib.import_module("eventrecon._kernels")
    raise ValueError(f"unknown backend {name!r}")


def available():
    names = ["python"]
    try:
        load("compiled")
    except ImportError:
        pass
    else:
        names.insert(0, "compiled")
    return names


if os.environ.get("EVENTRECON_PURE_PYTHON", "") not in ("", "0"):
    kernels, BACKEND = _fallback, "python"
else:
    try:
        kernels, BACKEND = load("compiled"), "compiled"
    except ImportError:
        log.debug("compiled kernels unavailable, using numpy fallback")
        kernels, BACKEND = _fallback, "python"
