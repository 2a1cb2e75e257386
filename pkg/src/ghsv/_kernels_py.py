"""Pure numpy/Python versions of the sampler hot loops.

Must stay behaviourally identical to ``_kernels.pyx``; the tests run both.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["spath_mh_steps", "laplace_w_scan", "log_multiplicity", "psi_gen_gamma"]


def psi_gen_gamma(s, alpha: float, b: float):
    s = np.asarray(s, dtype=float)
    if alpha == 0.0:
        return np.log1p(s / b)
    if b == 0.0:
        return s ** alpha / alpha
    return b ** alpha * np.expm1(alpha * np.log1p(s / b)) / alpha


def log_multiplicity(m) -> float:
    s = 0
    out = 0.0
    for j in range(len(m)):
        v = int(m[j])
        if v == 0:
            free = s - j
            if free <= 0:
                return -math.inf
            out += math.log(free)
        else:
            out -= math.lgamma(v)
        s += v
    return out


def spath_mh_steps(m, logphi, prop_i, prop_j, log_u, start: int = 0,
                   use_multiplicity: bool = True):
    """Run unit-move Metropolis proposals ``start..`` on ``m`` in place.

    Proposal ``t`` moves one unit from ``prop_i[t]`` to ``prop_j[t]`` (0-based).
    ``logphi[i, e]`` is ``log phi(i+1, e)`` with column 0 equal to zero.
    Returns ``(stop, n_accept)``; ``stop < len(prop_i)`` means proposal
    ``stop`` needs a column beyond the table and was not processed.
    """
    n = m.shape[0]
    ncol = logphi.shape[1]
    if np.any(m < 0) or np.any(m >= ncol):
        raise ValueError("every m_i needs a column in logphi")
    acc = 0
    K = prop_i.shape[0]
    t = start
    while t < K:
        i = int(prop_i[t])
        j = int(prop_j[t])
        mi = int(m[i])
        if mi == 0:
            t += 1
            continue
        if m[j] + 1 >= ncol:
            return t, acc
        if i < j:
            # prefix sums S_k, i <= k < j, drop by one; need S_k - 1 >= k + 1
            s = int(np.sum(m[:i]))
            ok = True
            for kk in range(i, j):
                s += int(m[kk])
                if s - 1 < kk + 1:
                    ok = False
                    break
            if not ok:
                t += 1
                continue
        mj = int(m[j])
        ratio = (logphi[i, mi - 1] + logphi[j, mj + 1] - logphi[i, mi] - logphi[j, mj])
        if use_multiplicity:
            before = log_multiplicity(m)
            m[i] -= 1
            m[j] += 1
            ratio += log_multiplicity(m) - before
            m[i] += 1
            m[j] -= 1
        if log_u[t] < ratio:
            m[i] -= 1
            m[j] += 1
            acc += 1
        t += 1
    return K, acc


def laplace_w_scan(w, R, psi_piece, psi_tail, w_prop, lr_prop, lr_cur, log_u,
                   lam: float, delta: float, a_x, e_x, W_piece, u_tail, W_tail,
                   alpha: float, b: float, cutoff: float = 50.0):
    """Sequential independence-MH scan over ``w`` with the Lambda ratio.

    ``w``, ``R`` (scaled weights, length n+1), ``psi_piece`` (n, Q) and
    ``psi_tail`` (Qt,) are updated in place.  ``a_x = (1-e^{-lam x})/lam`` and
    ``e_x = e^{-lam x}`` on the piece nodes; ``W_piece`` and ``W_tail`` carry the
    quadrature weights times eta (``/u`` for the tail).  Pieces whose change is
    damped by more than ``e^{-cutoff}`` are skipped.

    Returns ``(accepted, dlam_total)``.
    """
    n = w.shape[0]
    C = -math.expm1(-lam * delta) / lam
    lag = max(1, int(math.ceil(cutoff / (lam * delta))))
    accepted = np.zeros(n, dtype=np.int8)
    dtotal = 0.0
    for i in range(n):
        d = w_prop[i] - w[i]
        lo = max(0, i - lag)
        ks = np.arange(lo, i + 1)
        shift = C * d * np.exp(-lam * delta * (i - ks - 1.0))
        shift[-1] = 0.0
        wk = w[ks].copy()
        wk[-1] += d
        om = wk[:, None] * a_x[None, :] + (R[ks + 1] + shift)[:, None] * e_x[None, :]
        new_piece = psi_gen_gamma(om, alpha, b)
        dl = float(np.sum(W_piece[ks] * (new_piece - psi_piece[ks])))
        tail_on = lam * delta * i <= cutoff
        if tail_on:
            r0 = R[0] + C * d * math.exp(-lam * delta * i)
            new_tail = psi_gen_gamma(r0 * u_tail, alpha, b)
            dl += float(np.sum(W_tail * (new_tail - psi_tail)))
        if log_u[i] < -dl + lr_prop[i] - lr_cur[i]:
            accepted[i] = 1
            dtotal += dl
            w[i] = w_prop[i]
            psi_piece[ks] = new_piece
            if tail_on:
                psi_tail[:] = new_tail
            kk = np.arange(0, i + 1)
            R[kk] += C * d * np.exp(-lam * delta * (i - kk))
    return accepted, dtotal
