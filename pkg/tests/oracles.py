"""Independent reference computations shared by several test modules."""

import math

import numpy as np
from scipy import integrate


def direct_lambda(k, w):
    """``int psi(sum_i w_i g_i(y)) eta(y) dy`` by scipy quad, piece by piece."""
    f = lambda y: float(k.psi(k.omega_direct(w, y))) * float(k.eta_at(y))
    pts = [j * k.delta for j in range(k.n + 1)]
    tail = integrate.quad(f, -np.inf, -50, limit=200)[0] + integrate.quad(f, -50, 0, limit=400, epsabs=1e-13)[0]
    return tail + sum(integrate.quad(f, a, b, epsabs=1e-13, limit=200)[0] for a, b in zip(pts[:-1], pts[1:]))


def brute_partitions(n):
    """Set partitions of 1..n as sorted tuples of sorted tuples, by recursion."""
    if n == 0:
        return [()]
    out = []
    for p in brute_partitions(n - 1):
        for j in range(len(p)):
            q = list(p)
            q[j] = tuple(sorted(q[j] + (n,)))
            out.append(tuple(sorted(q)))
        out.append(tuple(sorted(p + ((n,),))))
    return out


def mixed_derivative_laplace(k, w, h=2e-3):
    """``E[tau_1 tau_2 e^{-w.tau}] = d^2/dw_1 dw_2 exp(-Lambda(w))`` for n = 2 by
    a fourth-order cross difference of the directly integrated exponent."""
    w = np.asarray(w, dtype=float)
    L = lambda a, b: math.exp(-direct_lambda(k, w + np.array([a, b])))
    c1 = (L(h, h) - L(h, -h) - L(-h, h) + L(-h, -h)) / (4 * h * h)
    H = 2 * h
    c2 = (L(H, H) - L(H, -H) - L(-H, H) + L(-H, -H)) / (4 * H * H)
    return (4 * c1 - c2) / 3
