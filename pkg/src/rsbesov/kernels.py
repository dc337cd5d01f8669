"""Backend selection for the hot loops.

The compiled extension is used when it imports; setting the environment
variable RSBESOV_KERNELS=python forces the numpy fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("RSBESOV_KERNELS", "").lower() != "python":
    try:
        from . import _kernels as _compiled

        _impl = _compiled
        BACKEND = "cython"
    except ImportError:
        pass

gather_correlate = _impl.gather_correlate
increment_norms = _impl.increment_norms


def backends() -> dict:
    """All importable implementations, keyed by name."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels as _compiled

        out["cython"] = _compiled
    except ImportError:
        pass
    return out
