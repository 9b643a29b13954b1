"""Backend selector: compiled walk kernels with a pure-Python fallback.

Importing this module picks ``rwreld._walkcore`` (Cython) when the extension
was built, else ``rwreld._walkcore_py``.  ``BACKEND`` names the active one;
both expose identical functions with bit-identical output.
"""

from __future__ import annotations

try:
    from . import _walkcore as _impl
except ImportError:  # extension not built: fall back to pure Python
    from . import _walkcore_py as _impl

BACKEND = _impl.BACKEND

HIT_LEFT = _impl.HIT_LEFT
HIT_RIGHT = _impl.HIT_RIGHT
CAPPED = _impl.CAPPED
EXHAUSTED = _impl.EXHAUSTED

run_hit_quenched = _impl.run_hit_quenched
run_hit_lazy = _impl.run_hit_lazy
run_position_lazy = _impl.run_position_lazy
