"""Select the compiled march when available; ``TDFLUX_PURE_PYTHON=1`` forces the numpy one."""

import os

from . import _lf_py

advance_py = _lf_py.advance
advance_generic = _lf_py.advance_generic

try:
    from ._lf_kernel import advance as advance_compiled
except ImportError:  # extension not built
    advance_compiled = None

if advance_compiled is not None and os.environ.get("TDFLUX_PURE_PYTHON") != "1":
    advance = advance_compiled
    BACKEND = "cython"
else:
    advance = advance_py
    BACKEND = "python"
