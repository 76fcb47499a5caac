"""Kernel backend selection.

The compiled extension is used when importable; ``METEOR_BACKEND=python``
forces the pure-Python twins.  ``kernels`` is the active module and
``BACKEND`` its name.
"""

import os

from . import _pykernels

BACKEND = "python"
kernels = _pykernels

if os.environ.get("METEOR_BACKEND", "").lower() != "python":
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        pass
    else:
        kernels = _compiled
        BACKEND = "cython"


def get_kernels(name: str | None = None):
    """Return the kernel module for ``name`` ('cython' or 'python'), default the active one."""
    if name is None:
        return kernels
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown backend {name!r}")
