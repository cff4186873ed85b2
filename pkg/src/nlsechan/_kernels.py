"""Backend selection for the hot kernels.

The compiled extension (``_core``) is preferred; the pure-numpy module
(``_kernels_py``) is the drop-in fallback.  Set ``NLSECHAN_PURE_PYTHON=1``
to force the fallback (used by the backend benchmark and parity tests).
"""

import os

from . import _kernels_py

if os.environ.get("NLSECHAN_PURE_PYTHON", "0") not in ("0", ""):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _core as _impl
        BACKEND = "compiled"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

mi_logpout = _impl.mi_logpout
sde_rotation = _impl.sde_rotation
log_conditional = _kernels_py.log_conditional  # cheap, always numpy


def get_backend(name):
    """Return the kernel module for 'compiled' or 'python' (or raise)."""
    if name == "python":
        return _kernels_py
    if name == "compiled":
        from . import _core
        return _core
    raise ValueError(f"unknown backend {name!r}")
