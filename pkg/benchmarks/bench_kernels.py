"""Compiled vs pure-Python sampler kernels.

    python benchmarks/bench_kernels.py [--n 250] [--repeat 5]

Times one s-path move batch and one w scan per backend on identical inputs
and checks that both produce the same result.
"""

import argparse
import time

import numpy as np

from ghsv import _kernels_py
from ghsv.levy import GenGammaFamily
from ghsv.ou_kernel import KernelTables, OuKernel

try:
    from ghsv import _kernels as _kernels_c
except ImportError:  # extension not built
    _kernels_c = None


def _inputs(n, seed=0):
    gen = np.random.default_rng(seed)
    k = OuKernel(0.5, 1.0, n, GenGammaFamily(0.3, 1.0))
    w = gen.gamma(2.0, 0.5, n)
    tab = KernelTables(k, w, emax=8)
    m = np.ones(n, dtype=np.int64)
    K = 20 * n
    pi = gen.integers(0, n, K)
    pj = gen.integers(0, n - 1, K)
    pj = (pj + (pj >= pi)).astype(np.int64)
    spath = (m, np.ascontiguousarray(tab.phi_table(8)), pi.astype(np.int64), pj, np.log(gen.random(K)))
    g = tab.grid
    scan = dict(
        w=w, R=tab.R.copy(), psi_piece=np.ascontiguousarray(k.psi(tab.omega)),
        psi_tail=np.ascontiguousarray(k.psi(tab.R[0] * tab.u)), w_prop=gen.gamma(2.0, 0.5, n),
        lr_prop=gen.normal(size=n), lr_cur=gen.normal(size=n), log_u=np.log(gen.random(n)),
        lam=k.lam, delta=k.delta, a_x=-np.expm1(-k.lam * g.x) / k.lam, e_x=np.exp(-k.lam * g.x),
        W_piece=np.ascontiguousarray(np.exp(tab.log_eta + tab.log_wx[None, :])), u_tail=tab.u,
        W_tail=np.exp(tab.log_wu + tab.log_eta_u) / tab.u, alpha=0.3, b=1.0)
    return spath, scan


def _copy(d):
    return {k: (v.copy() if isinstance(v, np.ndarray) else v) for k, v in d.items()}


def bench(mod, n, repeat):
    spath, scan = _inputs(n)
    ts, tw = [], []
    for _ in range(repeat):
        m = spath[0].copy()
        t0 = time.perf_counter()
        stop, acc = mod.spath_mh_steps(m, *spath[1:])
        ts.append(time.perf_counter() - t0)
        args = _copy(scan)
        t0 = time.perf_counter()
        accepted, dtot = mod.laplace_w_scan(**args)
        tw.append(time.perf_counter() - t0)
    return min(ts), min(tw), (m, acc, accepted, dtot, args["w"])


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=250)
    ap.add_argument("--repeat", type=int, default=5)
    a = ap.parse_args()
    rows = [("python", _kernels_py)] + ([("cython", _kernels_c)] if _kernels_c else [])
    res = {}
    print(f"n = {a.n}, s-path proposals = {20 * a.n}")
    print(f"{'backend':8s} {'spath moves [s]':>16s} {'w scan [s]':>12s}")
    for name, mod in rows:
        ts, tw, out = bench(mod, a.n, a.repeat)
        res[name] = (ts, tw, out)
        print(f"{name:8s} {ts:16.5f} {tw:12.5f}")
    if "cython" in res:
        p, c = res["python"], res["cython"]
        print(f"speed-up: spath x{p[0] / c[0]:.1f}, w scan x{p[1] / c[1]:.1f}")
        same = (np.array_equal(p[2][0], c[2][0]) and p[2][1] == c[2][1]
                and np.array_equal(p[2][2], c[2][2]) and np.allclose(p[2][4], c[2][4], rtol=0, atol=0))
        print(f"identical results: {same} (dLambda diff {abs(p[2][3] - c[2][3]):.2e})")
    else:
        print("compiled extension not available; build with `pip install -e . --no-build-isolation`")


if __name__ == "__main__":
    main()
