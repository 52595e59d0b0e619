"""Backend selection for the pseudo-likelihood accumulation kernel.

The compiled Cython kernel is preferred when available; the numpy
implementation is the fallback and the reference.  Set the environment
variable ``DOSEPREF_BACKEND=python`` (or ``cython``) to force a choice.
"""

import os

from . import _pykernel

_requested = os.environ.get("DOSEPREF_BACKEND", "").lower()

if _requested == "python":
    _impl = _pykernel
else:
    try:
        from . import _cykernel as _impl  # type: ignore[no-redef]
    except ImportError:
        if _requested == "cython":
            raise ImportError(
                "DOSEPREF_BACKEND=cython but the compiled kernel is unavailable"
            )
        _impl = _pykernel

accumulate = _impl.accumulate
BACKEND_NAME = _impl.BACKEND_NAME

__all__ = ["accumulate", "BACKEND_NAME"]
