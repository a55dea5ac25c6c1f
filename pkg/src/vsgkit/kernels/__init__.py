"""Kernel backend selection.

The loop-bound kernels (component labeling, square-SE morphology) ship in two
implementations: a numba @njit one and a pure-numpy fallback. The env var
``VSG_KERNEL_BACKEND`` picks one:

  * ``auto`` (default): numba when importable, else numpy;
  * ``numba``: require numba, raise if unavailable;
  * ``numpy``: force the fallback.

``benchmarks/bench_kernels.py`` compares the two on identical inputs.
"""

from __future__ import annotations

import os

from ..errors import ConfigError
from . import numpy_impl

_requested = os.environ.get("VSG_KERNEL_BACKEND", "auto").strip().lower()

if _requested not in ("auto", "numba", "numpy"):
    raise ConfigError(f"VSG_KERNEL_BACKEND must be auto|numba|numpy, got {_requested!r}")

if _requested == "numpy":
    _impl = numpy_impl
    ACTIVE_BACKEND = "numpy"
else:
    try:
        from . import numba_impl as _impl  # noqa: F401

        ACTIVE_BACKEND = "numba"
    except ImportError:
        if _requested == "numba":
            raise ConfigError("VSG_KERNEL_BACKEND=numba but numba is not installed") from None
        _impl = numpy_impl
        ACTIVE_BACKEND = "numpy"

erode = _impl.erode
dilate = _impl.dilate
label_components = _impl.label_components

__all__ = ["erode", "dilate", "label_components", "ACTIVE_BACKEND"]
