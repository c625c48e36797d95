"""Kernel backend selection: compiled Cython if available, numpy otherwise.

Set BATHYREC_PURE_PYTHON=1 to force the numpy fallback (used by the
benchmark and the backend-parity tests).
"""

import os

if os.environ.get("BATHYREC_PURE_PYTHON"):
    from . import _kernels_py as backend
else:
    try:
        from . import _kernels as backend  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as backend

from . import _kernels_py as numpy_backend

COMPILED = bool(getattr(backend, "COMPILED", False))
