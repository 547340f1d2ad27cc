"""Kernel backend selection.

The compiled extension is preferred when it imported cleanly; otherwise the
numpy implementation takes over.  Setting ``MODALMIX_BACKEND=python`` forces
the fallback, which the benchmark and cross-backend tests rely on.

Both backends expose the same three callables and status codes; per-point
results agree to floating-point noise.
"""

import os

from modalmix._backend import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("MODALMIX_BACKEND", "") != "python":
    try:
        from modalmix._backend import _kernels as _compiled
    except ImportError:
        pass
    else:
        BACKEND = "compiled"
        _impl = _compiled

STATUS_CONVERGED = _kernels_py.STATUS_CONVERGED
STATUS_MAX_ITER = _kernels_py.STATUS_MAX_ITER
STATUS_ASCENT_VIOLATION = _kernels_py.STATUS_ASCENT_VIOLATION
STATUS_NOT_SPD = _kernels_py.STATUS_NOT_SPD

log_component_terms = _impl.log_component_terms
shift_steps = _impl.shift_steps
ascend = _impl.ascend
