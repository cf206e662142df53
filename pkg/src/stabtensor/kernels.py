"""Kernel backend selection.

The compiled extension is used when it was built; otherwise the numpy
fallback is loaded.  Setting ``STABTENSOR_PURE_PYTHON=1`` forces the fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("STABTENSOR_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None
    if _compiled is not None:
        _impl = _compiled
        BACKEND = "cython"


def available_backends():
    """Return the mapping name -> module for every importable backend."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels as compiled
    except ImportError:
        return out
    out["cython"] = compiled
    return out


pp_eval = _impl.pp_eval
gl_panels = _impl.gl_panels
mc_char_mean = _impl.mc_char_mean
pp_canonicalize = _impl.pp_canonicalize
env_mul = _impl.env_mul
env_sum = _impl.env_sum
