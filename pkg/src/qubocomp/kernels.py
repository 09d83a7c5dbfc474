"""Kernel dispatch: the compiled extension when importable, otherwise NumPy.

Set ``QUBOCOMP_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _kernels_py

if os.environ.get("QUBOCOMP_PURE_PYTHON"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py
        BACKEND = "python"

batch_energy = _impl.batch_energy
prepare_energy = _impl.prepare_energy
batch_energy_prepared = _impl.batch_energy_prepared
gray_min_by_projection = _impl.gray_min_by_projection
