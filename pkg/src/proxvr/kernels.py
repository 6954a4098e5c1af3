"""Backend selection for the hot kernels.

The compiled extension ``proxvr._kernels`` is used when it imports; otherwise
the numpy implementation in ``proxvr._kernels_py`` is used.  Setting the
environment variable ``PROXVR_PURE_PYTHON=1`` forces the numpy backend.

Both backends are deterministic, but they sum in different orders, so results
agree to rounding rather than bitwise.
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if not os.environ.get("PROXVR_PURE_PYTHON"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"

LOSS_SQUARE = _kernels_py.LOSS_SQUARE
LOSS_ROBUST = _kernels_py.LOSS_ROBUST

glm_grad = _impl.glm_grad
glm_grad_diff = _impl.glm_grad_diff
soft_threshold = _impl.soft_threshold
clip = _impl.clip
project_ball = _impl.project_ball


def get_backend(name):
    """Return the kernel module for ``"cython"`` or ``"python"``.

    Used by the benchmark and the backend-equivalence tests.
    """
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown kernel backend {name!r}")
