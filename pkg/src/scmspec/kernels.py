"""Backend selection for the hot tridiagonal kernels.

The compiled extension is used when it imports; otherwise the numpy
fallback is used. Setting ``SCMSPEC_PURE_PYTHON=1`` forces the fallback.
"""

from __future__ import annotations

import os

from scmspec import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("SCMSPEC_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from scmspec import _kernels as _compiled
    except ImportError:  # extension not built
        pass
    else:
        _impl = _compiled
        BACKEND = "compiled"


def get_backend(name: str | None = None):
    """Return the kernel module called ``name`` (default: the active one)."""
    if name is None:
        return _impl
    if name == "python":
        return _kernels_py
    if name == "compiled":
        from scmspec import _kernels

        return _kernels
    raise ValueError(f"unknown backend {name!r}")


sturm_count = _impl.sturm_count
bisect_eigenvalues = _impl.bisect_eigenvalues
shifted_solve = _impl.shifted_solve
ar_recursion = _impl.ar_recursion
dual_simplex_iterate = _impl.dual_simplex_iterate
