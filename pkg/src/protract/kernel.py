"""Backend selection for table evaluation.

Imports the compiled interpreter when the extension built, otherwise
the pure-Python one. BACKEND names the default; eval_table accepts an
explicit backend for cross-checks and benchmarks.
"""

from __future__ import annotations

import numpy as np

from . import _kernel_py
from .program import CompiledTable

try:
    from . import _fastkernel
    BACKEND = "compiled"
except ImportError:
    _fastkernel = None
    BACKEND = "python"

__all__ = ["BACKEND", "eval_table", "eval_scalar", "available_backends"]


def available_backends() -> tuple:
    return ("compiled", "python") if _fastkernel is not None else ("python",)


def eval_table(table: CompiledTable, point, out=None, backend: str | None = None):
    """Evaluate every entry of a compiled table at one float point."""
    pt = np.asarray(point, dtype=np.float64)
    if table.max_var >= pt.shape[0]:
        raise ValueError("point has %d coordinates, table needs %d"
                         % (pt.shape[0], table.max_var + 1))
    if out is None:
        out = np.empty(table.n_out, dtype=np.float64)
    if backend is None:
        backend = BACKEND
    if backend == "compiled":
        if _fastkernel is None:
            raise RuntimeError("compiled kernel not available")
        _fastkernel.eval_table(table.ops, table.args, table.consts, pt, out,
                               table.stack_need, table.n_slots)
    elif backend == "python":
        ops, args, consts = table.as_lists()
        _kernel_py.eval_table(ops, args, consts, pt.tolist(), out,
                              table.stack_need, table.n_slots)
    else:
        raise ValueError("unknown backend %r" % backend)
    return out


def eval_scalar(table: CompiledTable, point, backend: str | None = None) -> float:
    return float(eval_table(table, point, backend=backend)[0])
