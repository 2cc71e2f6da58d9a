"""Backend selection for the pointwise kernels.

The compiled extension is used when it was built; otherwise, or when
``HALFFLOW_PURE_PYTHON=1`` is set, the numpy implementation is used.
"""
import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("HALFFLOW_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled  # type: ignore[attr-defined]
    except ImportError:  # extension not built
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"


def backends():
    """Available backends by name, fallback first."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels as compiled  # type: ignore[attr-defined]
    except ImportError:
        return out
    out["cython"] = compiled
    return out


sphere_nearest = _impl.sphere_nearest
sphere_tangent = _impl.sphere_tangent
circle_pair_nearest = _impl.circle_pair_nearest
circle_pair_tangent = _impl.circle_pair_tangent

# direct summation beats the FFT below about 49 taps (see benchmarks/bench_kernels.py)
DIRECT_STENCIL_MAX = 48


def correlate_circular(density, weights, support):
    """out[j] = sum_i sum_{|o| <= support} weights[i, o mod M] * density[i, (j + o) mod M]."""
    if 2 * support + 1 <= DIRECT_STENCIL_MAX:
        return _impl.correlate_circular(density, weights, support)
    return _kernels_py.correlate_circular(density, weights, support)
