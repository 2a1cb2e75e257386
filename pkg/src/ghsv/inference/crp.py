"""Sequential (weighted Chinese restaurant) seating for the partition posterior.

Seating ``r+1`` given the partition of ``{1..r}``:

* collapsed weights: new cell ``l_0 = theta({r+1})``, existing cell ``C_j``
  ``l_j = theta(C_j + {r+1}) / theta(C_j)``;
* uncollapsed weights, given the cell atoms ``(J_j, Y_j)``:
  ``l_0 = theta({r+1})`` and ``l_j = J_j g_{r+1}(Y_j)``.

The product of the normalisers ``c_r = l_0 + sum_j l_j`` is the importance
weight of the sequential draw; for the collapsed scheme
``q(p) * prod_r c_r = prod_j theta(C_j)``, so weighting by it targets the
partition posterior exactly.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from ..numerics import as_generator
from ..ou_kernel import KernelTables, OuKernel
from ..partitions import Partition

__all__ = ["crp_predictive_weights", "crp_log_weights", "crp_sample", "crp_tree"]


def crp_log_weights(tables: KernelTables, cells: Sequence[Sequence[int]], r: int,
                    jumps=None, locations=None) -> np.ndarray:
    """``log(l_0, l_1, ..)`` for seating ``r + 1`` (1-based) next to ``cells``."""
    new = tables.log_theta([r + 1])
    if jumps is None:
        old = [tables.log_theta(list(c) + [r + 1]) - tables.log_theta(c) for c in cells]
    else:
        k = tables.kernel
        g = k.g_weight(r + 1, np.asarray(locations, dtype=float))
        with np.errstate(divide="ignore"):
            old = list(np.log(np.asarray(jumps, dtype=float)) + np.log(g))
    return np.array([new] + list(old), dtype=float)


def crp_predictive_weights(k: OuKernel, w, history, r: int | None = None, *,
                           tables: KernelTables | None = None, jumps=None, locations=None):
    """Weights ``(l_0, l_1, .., l_{n(p_r)})`` for index ``r + 1``.

    ``history`` is a :class:`Partition` of ``{1..r}`` or a list of cells.
    Passing ``jumps`` and ``locations`` (one per cell) gives the uncollapsed
    weights.
    """
    cells = list(history.cells) if isinstance(history, Partition) else [tuple(c) for c in history]
    if r is None:
        r = sum(len(c) for c in cells)
    if r >= k.n:
        raise ValueError("r must be smaller than n")
    tables = tables or KernelTables(k, w)
    return np.exp(crp_log_weights(tables, cells, r, jumps, locations))


def crp_sample(k: OuKernel, w, rng=None, tables: KernelTables | None = None):
    """One sequential collapsed draw; returns ``(Partition, log importance weight)``."""
    gen = as_generator(rng)
    tables = tables or KernelTables(k, w)
    cells: list = []
    logw = 0.0
    for r in range(k.n):
        lw = crp_log_weights(tables, cells, r)
        c = logsumexp(lw)
        logw += c
        probs = np.exp(lw - c)
        j = int(gen.choice(len(lw), p=probs / probs.sum()))
        if j == 0:
            cells.append([r + 1])
        else:
            cells[j - 1].append(r + 1)
    return Partition(cells, k.n), logw


def crp_tree(k: OuKernel, w, tables: KernelTables | None = None) -> dict:
    """Exact sum over the seating decision tree.

    Returns ``{partition: (log q(p), log importance weight)}`` for every leaf.
    """
    tables = tables or KernelTables(k, w)
    out = {}

    def rec(cells, r, logq, logw):
        if r == k.n:
            out[Partition(cells, k.n)] = (logq, logw)
            return
        lw = crp_log_weights(tables, cells, r)
        c = float(logsumexp(lw))
        for j, l in enumerate(lw):
            nxt = [list(x) for x in cells]
            if j == 0:
                nxt.append([r + 1])
            else:
                nxt[j - 1].append(r + 1)
            rec(nxt, r + 1, logq + l - c, logw + c)

    rec([], 0, 0.0, 0.0)
    return out
