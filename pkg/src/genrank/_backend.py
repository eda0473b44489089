"""Pick the compiled kernels when available, else the numpy fallback.

Set ``GENRANK_PURE=1`` to force the fallback.
"""
import os

from . import _fallback

fallback = _fallback

if os.environ.get("GENRANK_PURE") == "1":
    kernels = _fallback
    NAME = "python"
else:
    try:
        from . import _kernels as kernels
        NAME = "cython"
    except ImportError:
        kernels = _fallback
        NAME = "python"


def compiled():
    """The compiled kernel module, or ``None`` if it was not built."""
    try:
        from . import _kernels
    except ImportError:
        return None
    return _kernels
