"""Kernel backend selection.

The compiled ``_kernels`` extension is used when it imports; otherwise the
numpy fallback.  Set ``MFZ_PURE_PYTHON=1`` to force the fallback.
"""
import os

if os.environ.get("MFZ_PURE_PYTHON") == "1":
    from . import _kernels_py as _impl
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        from . import _kernels_py as _impl
        BACKEND = "python"

log_spectral_radius = _impl.log_spectral_radius
batch_log_spectral_radius = _impl.batch_log_spectral_radius
batch_products = _impl.batch_products
word_extremes = _impl.word_extremes
word_min_rho = _impl.word_min_rho
lyapunov_exact = _impl.lyapunov_exact
neg_log_norms = _impl.neg_log_norms

__all__ = [
    "BACKEND",
    "log_spectral_radius",
    "batch_log_spectral_radius",
    "batch_products",
    "word_extremes",
    "word_min_rho",
    "lyapunov_exact",
    "neg_log_norms",
]
