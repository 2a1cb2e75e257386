"""Oracle suites behind ``ghsv validate``.

Each suite returns a :class:`SuiteReport` of checks ``(name, observed,
tolerance, passed)``; observed values are discrepancies unless stated.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, stats
from scipy.special import gammaln, logsumexp

from .distributions import ReturnParams, ghsv_logpdf, ghsv_logpdf_via_mixture
from .levy import DensitySpecifiedFamily, GenGammaFamily, density_family_cumulants
from .numerics import RandomSource, as_generator
from .ou_kernel import KernelTables, OuKernel
from .partitions import (Partition, bell_number, catalan_number, enumerate_partitions,
                         enumerate_spaths, partition_to_spath)

__all__ = ["Check", "SuiteReport", "SUITES", "run_suite", "suite_equivalence", "suite_laplace",
           "suite_thiele", "suite_crp", "suite_geweke", "suite_combinatorics", "suite_density",
           "laplace_direct", "geweke_test", "prior_draw"]


@dataclass
class Check:
    name: str
    observed: float
    tolerance: float
    passed: bool


@dataclass
class SuiteReport:
    suite: str
    checks: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    def add(self, name, observed, tolerance, passed=None):
        ok = bool(observed <= tolerance) if passed is None else bool(passed)
        self.checks.append(Check(name, float(observed), float(tolerance), ok))

    def table(self) -> str:
        width = max([len(c.name) for c in self.checks] + [5])
        lines = [f"suite {self.suite}  ({self.seconds:.1f} s)",
                 f"{'check'.ljust(width)}  {'observed':>12}  {'tolerance':>12}  result"]
        for c in self.checks:
            lines.append(f"{c.name.ljust(width)}  {c.observed:12.4g}  {c.tolerance:12.4g}  "
                         f"{'PASS' if c.passed else 'FAIL'}")
        lines.append(f"overall: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines)


# -- oracles -----------------------------------------------------------------

def laplace_direct(k: OuKernel, w) -> float:
    """``int psi(Omega(y)) eta(y) dy`` by scipy quadrature with ``Omega`` summed
    term by term."""
    w = np.asarray(w, dtype=float)

    def f(y):
        om = float(k.omega_direct(w, np.array([y]))[0])
        return float(k.psi(om)) * float(k.eta_at(np.array([y]))[0])

    # the tail in u = e^y, where psi(Omega) / u is integrable at 0
    def ft(u):
        if u <= 0:
            return 0.0
        return f(math.log(u)) / u

    total = integrate.quad(ft, 0.0, 1.0, epsabs=1e-13, epsrel=1e-12, limit=400)[0]
    for i in range(1, k.n + 1):
        total += integrate.quad(f, (i - 1) * k.delta, i * k.delta, epsabs=1e-13, epsrel=1e-12,
                                limit=400)[0]
    return total


def _random_instance(gen, n, alpha):
    b = 0.0 if alpha > 0 and gen.random() < 0.3 else float(gen.uniform(0.5, 2.0))
    fam = GenGammaFamily(alpha, b)
    k = OuKernel(float(gen.uniform(0.3, 2.0)), float(gen.uniform(0.5, 1.5)), n, fam)
    w = gen.gamma(2.0, 0.5, n)
    x = gen.standard_normal(n)
    params = ReturnParams(mu=float(gen.normal(0, 0.1)), beta=float(gen.normal(0, 0.3)), dt=k.delta)
    return k, w, x, params


# -- suites --------------------------------------------------------------------

def suite_equivalence(n: int = 4, instances: int = 20, seed: int = 0, tol: float = 1e-6) -> SuiteReport:
    """Partition-sum vs s-path-sum log-likelihood."""
    from .inference.likelihood import loglik_partition_sum, loglik_spath_sum

    rep = SuiteReport("equivalence")
    gen = RandomSource(seed).gen
    alphas = (-1.0, 0.0, 0.5)
    worst = {a: 0.0 for a in alphas}
    for j in range(instances):
        a = alphas[j % 3]
        k, w, x, params = _random_instance(gen, n, a)
        d = abs(loglik_partition_sum(x, w, params, k) - loglik_spath_sum(x, w, params, k))
        worst[a] = max(worst[a], d)
    for a in alphas:
        rep.add(f"max |diff| n={n} alpha={a:g}", worst[a], tol)
    return rep


def suite_laplace(n: int = 4, seed: int = 0, tol: float = 1e-6) -> SuiteReport:
    """Piecewise Laplace exponent (adaptive and tabulated) vs direct quadrature."""
    rep = SuiteReport("laplace")
    gen = RandomSource(seed).gen
    cases = [("finite activity", GenGammaFamily(-1.0, 1.5)), ("gamma", GenGammaFamily(0.0, 1.0)),
             ("infinite activity", GenGammaFamily(0.5, 1.0)), ("stable", GenGammaFamily(0.5, 0.0))]
    for m in range(1, n + 1):
        for label, fam in cases:
            k = OuKernel(float(gen.uniform(0.3, 2.0)), 1.0, m, fam)
            w = gen.gamma(2.0, 0.5, m)
            ref = laplace_direct(k, w)
            d1 = abs(k.total_laplace_exponent(w) - ref)
            d2 = abs(KernelTables(k, w).total_laplace_exponent() - ref)
            rep.add(f"n={m} {label}", max(d1, d2), tol)
    return rep


def suite_thiele(n: int = 4, tol: float = 1e-6) -> SuiteReport:
    """Cumulants of a density-specified family with ``f_T`` Gamma(1, b) vs the
    closed form at ``alpha = 0``."""
    rep = SuiteReport("thiele")
    L = max(1, min(n, 6))
    for b in (0.5, 1.0, 2.0):
        fam = DensitySpecifiedFamily(lambda t, b=b: stats.gamma.logpdf(t, 1.0, scale=1.0 / b), scale=1.0 / b)
        for s in (0.0, 0.7, 3.0):
            kap = density_family_cumulants(fam, s, L)
            l = np.arange(1, L + 1)
            ref = np.exp(gammaln(l) - l * np.log(b + s))
            rep.add(f"b={b:g} s={s:g} l<={L} (relative)", float(np.max(np.abs(kap / ref - 1))), tol)
    return rep


def suite_crp(n: int = 3, seed: int = 0, tol: float = 1e-6) -> SuiteReport:
    """Exact decision-tree sum of the sequential seating vs enumeration."""
    from .inference.crp import crp_tree

    rep = SuiteReport("crp")
    gen = RandomSource(seed).gen
    for alpha in (-1.0, 0.0, 0.5):
        k = OuKernel(float(gen.uniform(0.3, 2.0)), 1.0, n, GenGammaFamily(alpha, 1.0))
        w = gen.gamma(2.0, 0.5, n)
        tab = KernelTables(k, w)
        tree = crp_tree(k, w, tab)
        target = {p: sum(tab.log_theta(c) for c in p.cells) for p in enumerate_partitions(n)}
        lz = logsumexp(list(target.values()))
        # importance-weighted SIS law: q(p) W(p) / sum q W
        sis = {p: lq + lw for p, (lq, lw) in tree.items()}
        lzs = logsumexp(list(sis.values()))
        tv = 0.5 * sum(abs(math.exp(sis.get(p, -math.inf) - lzs) - math.exp(t - lz)) for p, t in target.items())
        rep.add(f"TV n={n} alpha={alpha:g}", tv, tol)
        rep.add(f"leaves n={n} alpha={alpha:g}", abs(len(tree) - bell_number(n)), 0.0)
    return rep


def suite_combinatorics(n: int = 5) -> SuiteReport:
    rep = SuiteReport("combinatorics")
    for m in range(1, n + 1):
        rep.add(f"s-paths n={m}", abs(len(enumerate_spaths(m)) - catalan_number(m)), 0.0)
        rep.add(f"partitions n={m}", abs(len(enumerate_partitions(m)) - bell_number(m)), 0.0)
    return rep


def suite_density(n: int = 5, tol: float = 1e-7) -> SuiteReport:
    rep = SuiteReport("density")
    xs = np.linspace(-2.0, 2.0, n)
    taus = np.geomspace(0.2, 5.0, n)
    betas = np.linspace(-1.0, 1.0, n)
    worst = 0.0
    for beta in betas:
        p = ReturnParams(mu=0.05, beta=float(beta), dt=1.0)
        for tau in taus:
            a = ghsv_logpdf(xs, tau, p)
            b = np.array([ghsv_logpdf_via_mixture(float(x), tau, p) for x in xs])
            worst = max(worst, float(np.max(np.abs(a - b))))
    rep.add(f"max |log density diff| {n}x{n}x{n} grid", worst, tol)
    return rep


# -- Geweke joint-distribution test ------------------------------------------------

def prior_draw(n, theta, priors, gen, delta=1.0):
    """Exact draw of ``(mu, beta, w, s-path, cell atoms, X)`` from the joint
    prior (finite-activity ``theta``)."""
    from .inference.sampler import LatentState
    from .simulation import SimConfig, simulate_bdlp

    mu = float(gen.normal(0.0, priors.mu_sd))
    beta = float(gen.normal(0.0, priors.beta_sd))
    cfg = SimConfig(n=n, delta=delta, lam=theta.lam, alpha=theta.alpha, b=theta.b, mu=mu, betas=(beta,))
    k = cfg.kernel()
    while True:
        jd = simulate_bdlp(cfg, gen)
        G = k.g_matrix(jd.locations) * jd.sizes[None, :]
        tau = G.sum(axis=1)
        if np.all(tau > 0):
            break
    z = gen.exponential(1.0, n)
    w = z / tau
    # each index picks the jump it is attributed to, with prob J g_i(Y) / tau_i
    owner = np.array([gen.choice(G.shape[1], p=G[i] / tau[i]) for i in range(n)])
    used = sorted(set(owner.tolist()), key=lambda j: int(np.flatnonzero(owner == j)[0]))
    cells = [sorted((np.flatnonzero(owner == j) + 1).tolist()) for j in used]
    m = np.asarray(partition_to_spath(Partition(cells, n)), dtype=np.int64)
    # atoms in s-path order (by minimal index)
    jumps = jd.sizes[used]
    locs = jd.locations[used]
    st = LatentState(w=w, mu=mu, betas=(beta,), theta=theta, m=m, jumps=jumps, locations=locs)
    x = mu * delta + beta / w + gen.standard_normal(n) / np.sqrt(w)
    return st, cells, x


def _geweke_stats(st):
    return np.array([st.mu, st.betas[0], st.n_p, st.mu ** 2, st.betas[0] ** 2,
                     float(np.mean(np.log(st.w)))])


GEWEKE_NAMES = ("mu", "beta", "n_p", "mu^2", "beta^2", "mean log w")


def _batch_se(x, batches=50):
    x = np.asarray(x)
    m = x.shape[0] // batches
    means = x[: m * batches].reshape(batches, m, -1).mean(axis=1)
    return means.std(axis=0, ddof=1) / math.sqrt(batches)


def geweke_test(n=3, draws=20000, seed=0, sampler="spath", thin=1, progress=None):
    """Marginal-conditional vs successive-conditional moments.

    ``theta`` is fixed at ``(alpha, b, lam) = (-1, 1, 1)`` with Normal(0, 1)
    priors on ``mu`` and ``beta``.  Returns ``(z-scores, mc means, sc means,
    names)``.
    """
    from .inference.likelihood import ReturnsData
    from .inference.sampler import GhsvSampler, McmcConfig, Priors, ThetaParams

    gen = RandomSource(seed, 1).gen
    theta = ThetaParams(-1.0, 1.0, 1.0)
    priors = Priors(mu_sd=1.0, beta_sd=1.0)
    mc = np.array([_geweke_stats(prior_draw(n, theta, priors, gen)[0]) for _ in range(draws)])
    gen2 = RandomSource(seed, 2).gen
    st, cells, x = prior_draw(n, theta, priors, gen2)
    cfg = McmcConfig(sampler=sampler, update_alpha=False, update_b=False, update_lam=False)
    smp = GhsvSampler(ReturnsData(x, 1.0), priors, cfg)
    if sampler == "partition":
        st.m = None
        st.cells = cells
        order = np.argsort([c[0] for c in cells])
        st.cells = [cells[i] for i in order]
        st.jumps = st.jumps[order]
        st.locations = st.locations[order]
    sc = np.empty((draws, mc.shape[1]))
    for it in range(draws):
        for _ in range(thin):
            smp.sweep(st, gen2)
            x = st.mu + st.betas[0] / st.w + gen2.standard_normal(n) / np.sqrt(st.w)
            smp.x = x
            smp.data = ReturnsData(x, 1.0)
        sc[it] = _geweke_stats(st)
        if progress is not None:
            progress(it + 1, draws)
    se_mc = mc.std(axis=0, ddof=1) / math.sqrt(draws)
    se_sc = _batch_se(sc)
    z = (mc.mean(axis=0) - sc.mean(axis=0)) / np.sqrt(se_mc ** 2 + se_sc ** 2)
    return z, mc.mean(axis=0), sc.mean(axis=0), GEWEKE_NAMES


def suite_geweke(n: int = 3, draws: int = 20000, seed: int = 0, z_tol: float = 3.0) -> SuiteReport:
    rep = SuiteReport("geweke")
    z, a, b, names = geweke_test(n, draws, seed)
    for name, zi in zip(names, z):
        rep.add(f"|z| {name} (n={n}, {draws} draws)", abs(zi), z_tol)
    return rep


SUITES: dict[str, Callable[..., SuiteReport]] = {
    "equivalence": suite_equivalence,
    "laplace": suite_laplace,
    "thiele": suite_thiele,
    "crp": suite_crp,
    "geweke": suite_geweke,
    "combinatorics": suite_combinatorics,
    "density": suite_density,
}


def run_suite(name: str, n: int | None = None, **kw) -> SuiteReport:
    if name not in SUITES:
        raise KeyError(name)
    t0 = time.perf_counter()
    rep = SUITES[name](**({} if n is None else {"n": n}), **kw)
    rep.seconds = time.perf_counter() - t0
    return rep
