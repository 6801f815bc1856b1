"""Selects the Monte Carlo kernel backend at import time.

The compiled Cython extension is preferred when present.  The pure-numpy
fallback implements the same contracts: the serving-selection scan is
bit-identical, while the distance/interference pipelines may differ in
the last floating-point digits (vectorized vs libm transcendentals).
Runs are deterministic for a fixed backend.  Set
``CLOUDCACHE_BACKEND=python`` or ``compiled`` to force a choice.
"""

from __future__ import annotations

import os

_requested = os.environ.get("CLOUDCACHE_BACKEND", "auto").lower()
if _requested not in ("auto", "compiled", "python"):
    raise RuntimeError(
        f"CLOUDCACHE_BACKEND must be 'compiled' or 'python', got {_requested!r}"
    )

if _requested in ("auto", "compiled"):
    try:
        from . import _kernels as _impl

        backend_name = "compiled"
    except ImportError:
        if _requested == "compiled":
            raise RuntimeError(
                "CLOUDCACHE_BACKEND=compiled but the extension is not built; "
                "reinstall with a working C toolchain"
            ) from None
        from . import _kernels_py as _impl

        backend_name = "python"
else:
    from . import _kernels_py as _impl

    backend_name = "python"

serve_powers = _impl.serve_powers
disk_distances = _impl.disk_distances
cloud_interference = _impl.cloud_interference
