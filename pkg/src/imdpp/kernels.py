"""Backend selection for the campaign kernel.

The compiled module is used when it imports; set ``IMDPP_PURE_PYTHON=1`` to force
the pure-Python fallback.
"""
import os

from . import _pykernels

py_backend = _pykernels
c_backend = None
if os.environ.get("IMDPP_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as c_backend
    except ImportError:
        c_backend = None

backend = c_backend if c_backend is not None else py_backend
BACKEND_NAME = "cython" if backend is c_backend else "python"
HAVE_COMPILED = c_backend is not None

sample_key = _pykernels.sample_key
SEEDED, PROMOTED, EXTRA = _pykernels.SEEDED, _pykernels.PROMOTED, _pykernels.EXTRA
KIND_NAMES = {SEEDED: "SEEDED", PROMOTED: "PROMOTED", EXTRA: "EXTRA"}


def get_backend(name=None):
    if name is None:
        return backend
    if name == "python":
        return py_backend
    if name == "cython":
        if c_backend is None:
            raise ImportError("compiled kernel is not available")
        return c_backend
    raise ValueError(f"unknown backend {name}")
