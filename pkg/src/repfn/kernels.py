"""Kernel dispatch: compiled extension when importable, pure Python otherwise.

Set ``REPFN_PURE_PYTHON=1`` to force the fallback.  ``BACKEND`` names the
implementation that was selected at import time; both modules are also
exposed directly for benchmarking and cross-checking.
"""

import os

from . import _pykernels as python

compiled = None
if not os.environ.get("REPFN_PURE_PYTHON"):
    try:
        from . import _ckernels as compiled
    except ImportError:
        compiled = None

_impl = compiled if compiled is not None else python
BACKEND = "compiled" if compiled is not None else "python"

enumerate_tuples = _impl.enumerate_tuples
tuple_weight_sums = _impl.tuple_weight_sums
delta_sums = _impl.delta_sums
