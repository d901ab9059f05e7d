"""Backend selection for the master-equation kernel.

The compiled ``_ckernels`` extension is used when it was built; otherwise the
numpy implementation in ``_pykernels`` is used. Setting
``MODESCOPE_PURE_PYTHON=1`` forces the numpy path.
"""

from __future__ import annotations

import os

from . import _pykernels

BACKEND = "python"
evolve_block_lindblad = _pykernels.evolve_block_lindblad

if os.environ.get("MODESCOPE_PURE_PYTHON") != "1":
    try:
        from . import _ckernels
    except ImportError:  # extension not built
        _ckernels = None
    else:
        BACKEND = "cython"
        evolve_block_lindblad = _ckernels.evolve_block_lindblad
else:
    _ckernels = None


AVAILABLE = ("cython", "python") if _ckernels is not None else ("python",)


def get_backend(name: str | None = None):
    """Return ``evolve_block_lindblad`` for ``"cython"``, ``"python"`` or the default."""
    if name is None:
        return evolve_block_lindblad
    if name == "python":
        return _pykernels.evolve_block_lindblad
    if name == "cython":
        if _ckernels is None:
            raise ImportError("compiled kernel not available")
        return _ckernels.evolve_block_lindblad
    raise ValueError(f"unknown backend {name!r}")
