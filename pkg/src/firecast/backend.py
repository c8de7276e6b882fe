"""Selects the window-kernel implementation at import time.

The compiled extension (`firecast._kernels`, built from `_kernels.pyx`)
is preferred when present; otherwise the numpy implementation in
`_kernels_np` is used.  Both expose the same four functions and produce
the same results up to floating-point summation order.

Set FIRECAST_BACKEND=python or FIRECAST_BACKEND=cython to force one;
forcing cython raises if the extension is not built.
"""
from __future__ import annotations

import os

from . import _kernels_np

_FORCED = os.environ.get("FIRECAST_BACKEND", "").strip().lower()

if _FORCED == "python":
    _impl = _kernels_np
elif _FORCED == "cython":
    from . import _kernels as _impl  # ImportError here means the extension is absent
else:
    if _FORCED:
        raise ValueError(f"FIRECAST_BACKEND must be 'python' or 'cython', got {_FORCED!r}")
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_np

lstm_forward = _impl.lstm_forward
lstm_backward = _impl.lstm_backward
gru_forward = _impl.gru_forward
gru_backward = _impl.gru_backward


def active_backend() -> str:
    """Name of the kernel implementation in use: 'cython' or 'python'."""
    return _impl.BACKEND_NAME


def available_backends() -> list[str]:
    """All importable kernel implementations, compiled one first."""
    names = []
    try:
        from . import _kernels  # noqa: F401
        names.append("cython")
    except ImportError:
        pass
    names.append("python")
    return names


def get_kernels(name: str):
    """Fetch a specific implementation module (for tests and benchmarks)."""
    if name == "python":
        return _kernels_np
    if name == "cython":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown backend {name!r}")
