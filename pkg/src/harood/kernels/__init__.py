"""Hot inner-loop kernels with a numba backend and a pure-numpy fallback.

The backend is chosen once at import time from the ``HAROOD_NUMBA`` env var:
``1`` forces numba, ``0`` forces the numpy fallback, unset auto-detects.
``set_backend`` switches at runtime (used by tests and the benchmark).
"""

import os

from . import numpy_impl

_BACKENDS = {"numpy": numpy_impl}

try:
    from . import numba_impl

    _BACKENDS["numba"] = numba_impl
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba_impl = None


def _default_backend() -> str:
    flag = os.environ.get("HAROOD_NUMBA", "").strip()
    if flag == "0":
        return "numpy"
    if flag == "1":
        if "numba" not in _BACKENDS:
            raise ImportError("HAROOD_NUMBA=1 but numba is not importable")
        return "numba"
    return "numba" if "numba" in _BACKENDS else "numpy"


_active = _default_backend()


def backend() -> str:
    """Name of the active kernel backend."""
    return _active


def set_backend(name: str) -> None:
    """Switch kernel backend; name must be 'numpy' or 'numba'."""
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown kernel backend: {name!r}")
    _active = name


def conv1d_forward(x, w, b):
    return _BACKENDS[_active].conv1d_forward(x, w, b)


def conv1d_backward(x, w, dout):
    return _BACKENDS[_active].conv1d_backward(x, w, dout)


def maxpool2_forward(x):
    return _BACKENDS[_active].maxpool2_forward(x)


def maxpool2_backward(idx, dout, t_in):
    return _BACKENDS[_active].maxpool2_backward(idx, dout, t_in)
