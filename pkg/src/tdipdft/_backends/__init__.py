"""Backend selection for the hot numeric kernels.

Two interchangeable implementations exist:

* ``numba_impl`` -- ``@njit``-compiled loops (default when numba imports cleanly)
* ``numpy_impl`` -- vectorized pure-numpy fallback

Selection is controlled by the ``TDIPDFT_BACKEND`` environment variable:
``auto`` (default), ``numba`` or ``numpy``.  ``benchmarks/bench_backends.py``
compares the two on identical inputs.
"""
from __future__ import annotations

import os

_impl = None


def _load():
    choice = os.environ.get("TDIPDFT_BACKEND", "auto").strip().lower()
    if choice not in ("auto", "numba", "numpy"):
        raise ValueError(
            f"TDIPDFT_BACKEND must be 'auto', 'numba' or 'numpy', got {choice!r}"
        )
    if choice in ("auto", "numba"):
        try:
            from . import numba_impl as impl

            return impl
        except ImportError:
            if choice == "numba":
                raise
    from . import numpy_impl as impl

    return impl


def get_backend():
    """Return the active backend module (cached after first call)."""
    global _impl
    if _impl is None:
        _impl = _load()
    return _impl


def set_backend(name: str | None):
    """Force a backend by name ('numba' / 'numpy'), or reset with None."""
    global _impl
    if name is None:
        _impl = None
        return
    if name == "numpy":
        from . import numpy_impl as impl
    elif name == "numba":
        from . import numba_impl as impl
    else:
        raise ValueError(f"unknown backend {name!r}")
    _impl = impl


def backend_name() -> str:
    return get_backend().NAME
