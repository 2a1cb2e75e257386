"""Acceptance criteria 1-9.

Each test prints one ``CRITERION k PASS|FAIL`` line straight to the terminal
(pytest's capture is disabled for that line) and then asserts.  Run as a script to get the
lines without pytest:

    python tests/test_acceptance.py
"""

import json
import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.special import gammaln, logsumexp

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from ghsv.cli import main as cli_main  # noqa: E402
from ghsv.distributions import ReturnParams, ghsv_logpdf, ghsv_logpdf_via_mixture  # noqa: E402
from ghsv.inference.likelihood import ReturnsData, loglik_partition_sum, loglik_spath_sum  # noqa: E402
from ghsv.inference.predictive import PredictiveSpec, posterior_tau_mean, predictive_density  # noqa: E402
from ghsv.inference.sampler import (GhsvSampler, LatentState, McmcConfig, ThetaParams,  # noqa: E402
                                    run_chain)
from ghsv.levy import DensitySpecifiedFamily, GenGammaFamily, density_family_cumulants  # noqa: E402
from ghsv.numerics import RandomSource  # noqa: E402
from ghsv.ou_kernel import KernelTables, OuKernel  # noqa: E402
from ghsv.partitions import Partition, enumerate_partitions, enumerate_spaths  # noqa: E402
from ghsv.simulation import SimConfig, simulate_dataset  # noqa: E402
from ghsv.validation import geweke_test  # noqa: E402
from tests.oracles import direct_lambda  # noqa: E402


_CAPSYS = None


@pytest.fixture(autouse=True)
def _terminal(capsys):
    global _CAPSYS
    _CAPSYS = capsys
    yield
    _CAPSYS = None


def emit(k, ok, text, seconds):
    line = f"CRITERION {k} {'PASS' if ok else 'FAIL'}  {text}  [{seconds:.1f} s]"
    with _CAPSYS.disabled():
        print("\n" + line, flush=True)
    return ok


def batch_se(x, batches=50):
    x = np.asarray(x, dtype=float)
    m = x.shape[0] // batches
    means = x[: m * batches].reshape(batches, m, *x.shape[1:]).mean(axis=1)
    return means.std(axis=0, ddof=1) / math.sqrt(batches)


# 1 -------------------------------------------------------------------------------------

def test_criterion_1_density_equivalence():
    t0 = time.perf_counter()
    worst = 0.0
    for x in np.linspace(-3.0, 3.0, 5):
        for tau in (0.1, 0.5, 1.0, 2.0, 5.0):
            for beta in np.linspace(-2.0, 2.0, 5):
                p = ReturnParams(mu=0.1, beta=beta)
                worst = max(worst, abs(float(ghsv_logpdf(x, tau, p)) - ghsv_logpdf_via_mixture(x, tau, p)))
    dt = time.perf_counter() - t0
    ok = worst < 1e-7 and dt < 10
    emit(1, ok, f"closed form vs mixture quadrature on 5x5x5 grid: max |diff| = {worst:.2e} (tol 1e-7)", dt)
    assert ok


# 2 -------------------------------------------------------------------------------------

def test_criterion_2_representation_equivalence():
    t0 = time.perf_counter()
    gen = np.random.default_rng(2024)
    worst = 0.0
    for inst in range(20):
        n = 2 + inst % 4
        alpha = (-1.0, 0.0, 0.5)[inst % 3]
        k = OuKernel(gen.uniform(0.2, 2.0), gen.uniform(0.3, 1.5), n, GenGammaFamily(alpha, gen.uniform(0.3, 3.0)))
        w = gen.gamma(2.0, 0.7, n)
        x = gen.normal(size=n)
        p = ReturnParams(mu=gen.normal(0, 0.3), beta=gen.normal(0, 0.5))
        worst = max(worst, abs(loglik_partition_sum(x, w, p, k) - loglik_spath_sum(x, w, p, k)))
    dt = time.perf_counter() - t0
    ok = worst < 1e-6 and dt < 300
    emit(2, ok, f"partition sum vs s-path sum, 20 instances n=2..5: max |diff| = {worst:.2e} (tol 1e-6)", dt)
    assert ok


# 3 -------------------------------------------------------------------------------------

def test_criterion_3_laplace_decomposition():
    t0 = time.perf_counter()
    gen = np.random.default_rng(3)
    worst = 0.0
    for alpha, b in ((-1.0, 1.0), (0.0, 1.0), (0.5, 1.0), (0.5, 0.0)):
        for n in (1, 2, 3, 4):
            k = OuKernel(gen.uniform(0.3, 2.0), gen.uniform(0.5, 1.5), n, GenGammaFamily(alpha, b))
            w = gen.gamma(2.0, 0.7, n)
            ref = direct_lambda(k, w)
            worst = max(worst, abs(k.total_laplace_exponent(w) - ref),
                        abs(KernelTables(k, w).total_laplace_exponent() - ref))
    dt = time.perf_counter() - t0
    ok = worst < 1e-6 and dt < 60
    emit(3, ok, f"Phi_0 + sum Phi_i vs direct quadrature, n<=4, finite/infinite activity and b=0: "
                f"max |diff| = {worst:.2e} (tol 1e-6)", dt)
    assert ok


# 4 -------------------------------------------------------------------------------------

def test_criterion_4_thiele_vs_closed_form():
    t0 = time.perf_counter()
    worst = 0.0
    for b in (0.5, 1.0, 2.0):
        # T ~ Gamma(1, rate b) is the alpha = 0 generalized Gamma variable
        fam = DensitySpecifiedFamily(lambda t, b=b: math.log(b) - b * np.asarray(t), scale=1.0 / b)
        for s in (0.0, 0.5, 2.0):
            k = density_family_cumulants(fam, s, 4)
            l = np.arange(1, 5)
            closed = np.exp(gammaln(l) - gammaln(1.0) - l * math.log(b + s))
            worst = max(worst, float(np.max(np.abs(k - closed) / np.maximum(1.0, closed))))
    dt = time.perf_counter() - t0
    ok = worst < 1e-6
    emit(4, ok, f"Thiele cumulants of a Gamma f_T vs closed form, l<=4: max rel diff = {worst:.2e} (tol 1e-6)", dt)
    assert ok


# 5 -------------------------------------------------------------------------------------

def test_criterion_5_combinatorics():
    t0 = time.perf_counter()
    sp = [len(enumerate_spaths(n)) for n in range(1, 6)]
    bp = [len(enumerate_partitions(n)) for n in range(1, 6)]
    ok = sp == [1, 2, 5, 14, 42] and bp == [1, 2, 5, 15, 52]
    emit(5, ok, f"s-path counts {sp}, partition counts {bp}", time.perf_counter() - t0)
    assert ok


# 6 -------------------------------------------------------------------------------------

def _reseat_check(sweeps=100_000):
    n = 3
    theta = ThetaParams(0.5, 1.0, 0.8)
    w = np.array([0.5, 1.2, 2.0])
    st = LatentState(w=w, mu=0.0, betas=(0.0,), theta=theta, cells=[[1], [2], [3]])
    off = dict(update_atoms=False, update_w=False, update_mu_beta=False,
               update_alpha=False, update_b=False, update_lam=False)
    smp = GhsvSampler(ReturnsData(np.array([0.1, -0.4, 0.3])), mcmc=McmcConfig(sampler="partition", **off))
    tab = KernelTables(OuKernel(theta.lam, 1.0, n, theta.family()), w, emax=n)
    parts = enumerate_partitions(n)
    lp = np.array([sum(tab.log_theta(c) for c in p.cells) for p in parts])
    target = np.exp(lp - logsumexp(lp))
    idx = {p: j for j, p in enumerate(parts)}
    hits = np.zeros((sweeps, len(parts)))
    gen = RandomSource(61).gen
    for t in range(sweeps):
        smp.sweep(st, gen)
        hits[t, idx[Partition(st.cells, n)]] = 1
    z = (hits.mean(axis=0) - target) / batch_se(hits)
    return z


def _spath_check(n, proposals=1_000_000, per_record=2):
    theta = ThetaParams(0.0, 1.0, 1.2)
    w = np.linspace(0.5, 2.0, n)
    st = LatentState(w=w, mu=0.0, betas=(0.0,), theta=theta, m=np.ones(n, dtype=np.int64))
    smp = GhsvSampler(ReturnsData(np.zeros(n)), mcmc=McmcConfig(multiplicity=False))
    tab = KernelTables(OuKernel(theta.lam, 1.0, n, theta.family()), w, emax=n)
    paths = enumerate_spaths(n)
    lp = np.array([sum(tab.log_phi(i + 1, v) for i, v in enumerate(m)) for m in paths])
    target = np.exp(lp - logsumexp(lp))
    idx = {tuple(m): j for j, m in enumerate(paths)}
    N = proposals // per_record
    hits = np.zeros((N, len(paths)))
    gen = RandomSource(62 + n).gen
    for t in range(N):
        smp.update_spath(st, gen, n_moves=per_record)
        hits[t, idx[tuple(st.m)]] = 1
    return (hits.mean(axis=0) - target) / batch_se(hits)


def test_criterion_6_sampler_correctness():
    t0 = time.perf_counter()
    za = _reseat_check()
    zb = np.concatenate([_spath_check(2), _spath_check(3), _spath_check(4)])
    results = {}
    for sampler in ("spath", "partition"):
        z, a, b, names = geweke_test(3, 100_000, seed=6, sampler=sampler)
        results[sampler] = dict(zip(names, z))
    zc = np.array([results[s][k] for s in results for k in ("beta", "mu", "n_p")])
    dt = time.perf_counter() - t0
    ok_a = bool(np.all(np.abs(za) < 3))
    ok_b = bool(np.all(np.abs(zb) < 3))
    ok_c = bool(np.all(np.abs(zc) < 3))
    ok = ok_a and ok_b and ok_c and dt < 1800
    geweke_txt = "; ".join(f"{s}: " + ", ".join(f"{k} {v:+.2f}" for k, v in r.items()) for s, r in results.items())
    emit(6, ok, f"(a) reseat max|z| = {np.max(np.abs(za)):.2f} over 5 partitions, 1e5 sweeps; "
                f"(b) s-path max|z| = {np.max(np.abs(zb)):.2f} over 21 paths (n=2,3,4), 1e6 proposals each; "
                f"(c) Geweke n=3, 1e5 draws, z-scores [{geweke_txt}]", dt)
    assert ok


# 7 -------------------------------------------------------------------------------------

def test_criterion_7_simulation_laplace():
    t0 = time.perf_counter()
    cfg = SimConfig(n=3, alpha=-1.0, b=1.0, lam=0.8, delta=1.0)
    k = cfg.kernel()
    gen = RandomSource(7).gen
    taus = np.array([simulate_dataset(cfg, gen).tau for _ in range(10_000)])
    ws = [np.array([0.5, 0.5, 0.5]), np.array([0.2, 1.0, 3.0]), np.array([2.0, 0.1, 0.7])]
    zs = []
    for w in ws:
        v = np.exp(-taus @ w)
        zs.append((v.mean() - math.exp(-k.total_laplace_exponent(w))) / (v.std(ddof=1) / math.sqrt(v.size)))
    dt = time.perf_counter() - t0
    ok = bool(np.all(np.abs(zs) < 3))
    emit(7, ok, f"E exp(-w.tau) from 1e4 exact simulations vs exp(-Lambda) at 3 w vectors: "
                f"z = {', '.join(f'{z:+.2f}' for z in zs)}", dt)
    assert ok


# 8 -------------------------------------------------------------------------------------

def test_criterion_8_end_to_end(tmp_path):
    t0 = time.perf_counter()
    cover = {"mu": 0, "beta": 0}
    truth = {"mu": 0.05, "beta": 0.2}
    fit_times = []
    reps = 10
    for r in range(reps):
        cfg = {"schema_version": 1,
               "model": {"lam": 1.0, "alpha": -1.0, "b": 1.0, "mu": 0.05, "beta": 0.2},
               "simulate": {"n": 250, "seed": 800 + r},
               "mcmc": {"iters": 400, "burnin": 100, "seed": 900 + r},
               "output": {"dir": f"rep{r}"}}
        path = tmp_path / f"rep{r}.json"
        path.write_text(json.dumps(cfg))
        assert cli_main(["simulate", "--config", str(path)]) == 0
        t1 = time.perf_counter()
        assert cli_main(["fit", "--config", str(path), "--data", str(tmp_path / f"rep{r}" / "returns.csv")]) == 0
        fit_times.append(time.perf_counter() - t1)
        summ = json.loads((tmp_path / f"rep{r}" / "summary.json").read_text())
        for name in cover:
            q = summ["parameters"][name]
            cover[name] += int(q["p05"] <= truth[name] <= q["p95"])
    dt = time.perf_counter() - t0
    ok = all(c >= 6 for c in cover.values()) and max(fit_times) < 1200
    emit(8, ok, f"90% intervals cover mu in {cover['mu']}/{reps}, beta in {cover['beta']}/{reps} "
                f"(n=250, 400 kept after 100 burn-in); slowest fit {max(fit_times):.0f} s", dt)
    assert ok


# 9 -------------------------------------------------------------------------------------

def test_criterion_9_predictive():
    t0 = time.perf_counter()
    cfg = SimConfig(n=50, alpha=-1.0, b=1.0, lam=1.0, mu=0.05, betas=(0.2,), seed=9)
    out = simulate_dataset(cfg)
    k = cfg.kernel()
    tr = run_chain(out.x, k, mcmc=McmcConfig(iters=100, burnin=50, seed=9))
    x = 0.05 + 5.0 * np.sinh(np.linspace(-7.0, 7.0, 4001))
    dens, se, mass = predictive_density(tr, PredictiveSpec(1.0, x), k, max_draws=40)
    integral = float(np.trapezoid(dens, x))
    kp = OuKernel(1.0, 1.0, 2, GenGammaFamily(0.0, 1.0))
    prior = LatentState(w=np.zeros(2), mu=0.0, betas=(0.0,), theta=ThetaParams(0.0, 1.0, 1.0),
                        m=np.ones(2, dtype=np.int64))
    tau1 = float(posterior_tau_mean([prior], kp, np.array([1.0]))[0][0])
    dt = time.perf_counter() - t0
    ok = 0.98 <= integral <= 1.02 and abs(tau1 - 1.0) < 1e-6
    emit(9, ok, f"predictive grid integral = {integral:.5f} (40 draws, |x - mu| <= {x[-1] - 0.05:.0f}); "
                f"prior-case E tau(1) = {tau1:.10f}", dt)
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
