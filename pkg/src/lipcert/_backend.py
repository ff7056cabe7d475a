"""Pick the kernel implementation once, at import time.

The compiled extension is preferred; set ``LIPCERT_PURE_PYTHON=1`` to force
the numpy fallback (useful for debugging and for the backend benchmark).
"""

import logging
import os

from . import _pykernels

log = logging.getLogger(__name__)

python = _pykernels
try:
    from . import _kernels as compiled
except ImportError:  # extension not built
    compiled = None


def _select():
    if os.environ.get("LIPCERT_PURE_PYTHON", "").strip() not in ("", "0"):
        return python
    if compiled is None:
        log.debug("compiled kernels unavailable; using numpy fallback")
        return python
    return compiled


kernels = _select()
