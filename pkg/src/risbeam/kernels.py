"""Backend selection for the inner loops.

The compiled extension is used when it was built; otherwise the numpy
fallback.  ``RISBEAM_BACKEND=python`` forces the fallback.
"""

import os

from . import _pykernels

python_backend = _pykernels

try:
    from . import _ckernels as cython_backend
except ImportError:  # extension not built
    cython_backend = None

if cython_backend is not None and os.environ.get("RISBEAM_BACKEND", "").lower() != "python":
    _active = cython_backend
else:
    _active = _pykernels

BACKEND = _active.BACKEND
posterior_update_into = _active.posterior_update_into
project = _active.project
train_epoch = _active.train_epoch


def get_backend(name=None):
    """Return the kernel module for ``name`` ("cython" or "python"), default the active one."""
    if name is None:
        return _active
    if name == "python":
        return _pykernels
    if name == "cython":
        if cython_backend is None:
            raise ImportError("compiled kernels are not built (pip install -e . --no-build-isolation)")
        return cython_backend
    raise ValueError(f"unknown backend {name!r}")
