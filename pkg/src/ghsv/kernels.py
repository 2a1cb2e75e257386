"""Selects the compiled sampler kernels when available.

Set ``GHSV_PURE_PYTHON=1`` to force the numpy fallback everywhere.
``BACKEND`` is ``"cython"`` or ``"python"``; ``KERNEL_BACKENDS`` records the
choice per kernel.

The w scan defaults to the numpy version even when the extension is built:
its cost is dominated by ``log1p``/``expm1`` over whole node blocks, where
numpy's vectorised math beats the scalar libm calls of the compiled loop
(see ``benchmarks/bench_kernels.py``).  ``GHSV_COMPILED_WSCAN=1`` opts in.
"""

from __future__ import annotations

import os

from . import _kernels_py


def _flag(name: str) -> bool:
    return os.environ.get(name, "").strip() not in ("", "0")


try:
    if _flag("GHSV_PURE_PYTHON"):
        raise ImportError("pure Python requested")
    from . import _kernels as _impl  # type: ignore[attr-defined]
    BACKEND = "cython"
except ImportError:
    _impl = _kernels_py
    BACKEND = "python"

_wscan_impl = _impl if (BACKEND == "cython" and _flag("GHSV_COMPILED_WSCAN")) else _kernels_py

spath_mh_steps = _impl.spath_mh_steps
log_multiplicity = _impl.log_multiplicity
psi_gen_gamma = _impl.psi_gen_gamma
laplace_w_scan = _wscan_impl.laplace_w_scan

KERNEL_BACKENDS = {
    "spath_mh_steps": BACKEND,
    "log_multiplicity": BACKEND,
    "psi_gen_gamma": BACKEND,
    "laplace_w_scan": "cython" if _wscan_impl is not _kernels_py else "python",
}

__all__ = ["BACKEND", "KERNEL_BACKENDS", "spath_mh_steps", "laplace_w_scan", "log_multiplicity",
           "psi_gen_gamma"]
