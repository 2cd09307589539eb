"""Backend selection for the hot-loop kernels.

The compiled Cython module is preferred when importable; otherwise the pure
numpy fallback is used. ``SVTRANS_BACKEND=numpy`` forces the fallback and
``SVTRANS_BACKEND=cython`` makes a missing extension a hard error (useful in
benchmarks and backend-agreement tests).
"""

import os

from . import _numpy_backend

_requested = os.environ.get("SVTRANS_BACKEND", "").strip().lower()
if _requested not in ("", "auto", "numpy", "cython"):
    raise ImportError(f"SVTRANS_BACKEND must be 'numpy' or 'cython', got {_requested!r}")

if _requested == "numpy":
    _impl = _numpy_backend
elif _requested == "cython":
    from . import _kernels as _impl
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _numpy_backend

backend_name = _impl.NAME
similarity_core = _impl.similarity_core
rmsprop_update = _impl.rmsprop_update
