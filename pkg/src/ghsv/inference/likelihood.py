"""Complete-data log-likelihood in ``w`` in partition-sum and s-path-sum form.

Both evaluate

    log B(w) - Lambda(Omega_n) + sum_i log N(X_i | mu D + sum_j beta_j w_i^-a_j, w_i^-2a_0)

with ``B(w) = sum_p prod_j theta(C_j | w)``.  The partition form enumerates
partitions and integrates every cell directly; the s-path form uses
``theta(C) = a(C) phi(min C, |C|)`` and groups partitions by s-path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from ..distributions import ReturnParams
from ..ou_kernel import KernelTables, OuKernel
from ..partitions import (EnumerationGuardError, enumerate_partitions,
                          enumerate_spaths, log_spath_multiplicity)

__all__ = [
    "ReturnsData",
    "log_normal_terms",
    "loglik_partition_sum",
    "loglik_spath_sum",
    "log_bell_sum",
]

MAX_PARTITION_SUM_N = 8


@dataclass(frozen=True)
class ReturnsData:
    """Aggregate returns ``X_1..X_n`` on intervals of length ``delta``."""

    x: np.ndarray
    delta: float = 1.0

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        if x.size == 0:
            raise ValueError("no returns")
        if not np.all(np.isfinite(x)):
            raise ValueError("returns must be finite")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        object.__setattr__(self, "x", x)

    @property
    def n(self) -> int:
        return self.x.size


def _as_x(X):
    return X.x if isinstance(X, ReturnsData) else np.asarray(X, dtype=float)


def log_normal_terms(X, w, params: ReturnParams) -> np.ndarray:
    """Per-observation ``log N(X_i | mu D + shift(w_i), w_i^-2a_0)``."""
    x = _as_x(X)
    w = np.asarray(w, dtype=float)
    sd = w ** (-params.exponents[0])
    z = (x - params.mu * params.dt - params.mean_shift(w)) / sd
    return -0.5 * z * z - np.log(sd) - 0.5 * math.log(2 * math.pi)


def loglik_partition_sum(X, w, params: ReturnParams, k: OuKernel, cfg=None) -> float:
    """Exhaustive partition sum with per-cell quadrature; ``n <= 8``."""
    x = _as_x(X)
    n = x.size
    if n > MAX_PARTITION_SUM_N:
        raise EnumerationGuardError(f"n={n} exceeds the partition-sum guard {MAX_PARTITION_SUM_N}")
    if k.n != n:
        raise ValueError("kernel and data sizes differ")
    w = np.asarray(w, dtype=float)
    cache: dict = {}

    def log_theta(c):
        if c not in cache:
            cache[c] = k.log_cell_integral_theta(c, w, cfg, method="direct")
        return cache[c]

    terms = [sum(log_theta(c) for c in p.cells) for p in enumerate_partitions(n)]
    return float(logsumexp(terms)) - k.total_laplace_exponent(w, cfg) + float(np.sum(log_normal_terms(x, w, params)))


def log_bell_sum(tables: KernelTables, multiplicity: bool = True) -> float:
    """``log[a_n sum_m N(m) prod_i phi(i, m_i)]`` over the enumerated s-paths.

    With ``multiplicity=False`` the counts ``N(m)`` are dropped, which gives
    the s-path sum without regard to how many partitions share a path.
    """
    k = tables.kernel
    paths = enumerate_spaths(k.n)
    tables.extend(k.n)
    tab = tables.phi_table(k.n)
    rows = np.arange(k.n)
    terms = []
    for m in paths:
        t = float(np.sum(tab[rows, np.asarray(m)]))
        if multiplicity:
            t += log_spath_multiplicity(m)
        terms.append(t)
    return k.log_a_n() + float(logsumexp(terms))


def loglik_spath_sum(X, w, params: ReturnParams, k: OuKernel, cfg=None, *,
                     multiplicity: bool = True, tables: KernelTables | None = None) -> float:
    """s-path form of the same quantity; ``n <= 12``.

    ``phi`` and ``Lambda`` come from the fixed-grid tables used by the samplers.
    """
    x = _as_x(X)
    if k.n != x.size:
        raise ValueError("kernel and data sizes differ")
    w = np.asarray(w, dtype=float)
    tables = tables or KernelTables(k, w, emax=k.n)
    return (log_bell_sum(tables, multiplicity) - tables.total_laplace_exponent()
            + float(np.sum(log_normal_terms(x, w, params))))
