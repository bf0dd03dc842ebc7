"""Hot-kernel dispatch: the compiled extension when built, numpy otherwise.

Set ``FERMIEQ_PURE_PYTHON=1`` to force the numpy fallback.
"""

import os

from fermieq import _pykernels

BACKEND = "python"
_impl = _pykernels
if os.environ.get("FERMIEQ_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from fermieq import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        pass


def backends() -> dict:
    """All importable kernel implementations, keyed by name."""
    out = {"python": _pykernels}
    try:
        from fermieq import _ckernels
        out["cython"] = _ckernels
    except ImportError:
        pass
    return out


window_profile_integrals = _impl.window_profile_integrals
tent_pair_sum = _impl.tent_pair_sum
