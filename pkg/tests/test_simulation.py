import math

import numpy as np
import pytest
from scipy import integrate, stats
from scipy.special import ndtr

from ghsv.levy import GenGammaFamily
from ghsv.numerics import RandomSource
from ghsv.ou_kernel import OuKernel
from ghsv.simulation import SimConfig, simulate_bdlp, simulate_dataset
from tests.conftest import mc_z


def test_poisson_jump_count():
    cfg = SimConfig(n=3, t0=2.0, alpha=-1.0, b=1.0)
    gen = RandomSource(1).gen
    counts = np.array([len(simulate_bdlp(cfg, gen)) for _ in range(10_000)])
    assert abs(mc_z(counts, 5.0)) < 3


def test_jumps_positive_inside_window_and_deterministic():
    for alpha in (-1.0, 0.0, 0.5):
        cfg = SimConfig(n=4, alpha=alpha, b=1.0, trunc_eps=1e-4, seed=3)
        jd = simulate_bdlp(cfg)
        assert np.all(jd.sizes > 0)
        assert np.all((jd.locations >= -cfg.tail_window) & (jd.locations <= 4.0))
        again = simulate_bdlp(cfg)
        np.testing.assert_array_equal(jd.sizes, again.sizes)
    a = simulate_dataset(SimConfig(n=10, seed=9))
    b = simulate_dataset(SimConfig(n=10, seed=9))
    np.testing.assert_array_equal(a.x, b.x)


def test_tau_is_kernel_sum():
    out = simulate_dataset(SimConfig(n=5, alpha=0.0, b=2.0, trunc_eps=1e-5, seed=4))
    k = out.config.kernel()
    tau = np.array([sum(u * float(k.g_weight(i, y)) for u, y in out.jumps) for i in range(1, 6)])
    np.testing.assert_allclose(out.tau, tau, rtol=1e-12)


def test_median_symmetry():
    gen = RandomSource(5).gen
    cfg = SimConfig(n=1, mu=0.0, betas=(0.0,))
    x = np.array([simulate_dataset(cfg, gen).x[0] for _ in range(10_000)])
    boot = [np.median(np.random.default_rng(i).choice(x, x.size)) for i in range(100)]
    assert abs(np.median(x)) < 3 * np.std(boot)


def test_return_cdf_given_tau():
    gen = RandomSource(6).gen
    cfg = SimConfig(n=1, mu=0.1, betas=(0.3,))
    outs = [simulate_dataset(cfg, gen) for _ in range(10_000)]
    x = np.array([o.x[0] for o in outs])
    tau = np.array([o.tau[0] for o in outs])
    z, wz = np.polynomial.laguerre.laggauss(80)
    grid = np.quantile(x, np.linspace(0.05, 0.95, 15))

    def cdf_given_tau(q):
        s = tau[:, None] / z[None, :]
        return (ndtr((q - 0.1 - 0.3 * s) / np.sqrt(s)) @ wz)

    model = np.array([np.mean(cdf_given_tau(q)) for q in grid])
    emp = np.array([(x <= q).mean() for q in grid])
    assert np.max(np.abs(model - emp)) < 0.02


def test_volatility_clustering():
    # rare large jumps: with b = 1 the CV of tau is ~ sqrt(lam b) and the Z, eps noise hides it
    out = simulate_dataset(SimConfig(n=2000, lam=0.1, b=10.0, seed=7))
    a = np.abs(out.x)
    rho = stats.spearmanr(a[:-1], a[1:]).statistic
    assert rho > 3 / math.sqrt(a.size)


def test_laplace_identity_small():
    cfg = SimConfig(n=3, alpha=-1.0, b=1.0, lam=0.7)
    k = cfg.kernel()
    w = np.array([0.5, 1.0, 0.2])
    gen = RandomSource(8).gen
    vals = np.array([math.exp(-float(w @ simulate_dataset(cfg, gen).tau)) for _ in range(4000)])
    assert abs(mc_z(vals, math.exp(-k.total_laplace_exponent(w)))) < 3


def test_mean_tau():
    cfg = SimConfig(n=3, alpha=-1.0, b=2.0, lam=0.6, delta=0.8)
    k = cfg.kernel()
    gen = RandomSource(9).gen
    taus = np.array([simulate_dataset(cfg, gen).tau for _ in range(10_000)])
    for i in range(1, 4):
        gi = lambda y: float(k.g_weight(i, y))
        mass = integrate.quad(gi, -cfg.tail_window, 0)[0] + sum(
            integrate.quad(gi, (j - 1) * 0.8, j * 0.8)[0] for j in range(1, i + 1))
        assert abs(mc_z(taus[:, i - 1], cfg.kappa1 * mass)) < 3


def test_truncation_accounting():
    cfg = SimConfig(n=2, alpha=0.5, b=1.0, trunc_eps=1e-3, seed=10)
    out = simulate_dataset(cfg)
    window = cfg.tail_window + 2.0
    direct = integrate.quad(lambda u: u * math.exp(float(cfg.family.rho_logdensity(u))), 0, 1e-3)[0]
    assert out.neglected_mass == pytest.approx(direct * window, rel=1e-8)
    assert out.tail_residual == pytest.approx(cfg.tail_tol, rel=1e-12)
    exact = simulate_dataset(SimConfig(n=2, alpha=-1.0, b=1.0, seed=10))
    assert exact.neglected_mass == 0.0


def test_zero_tau_gives_degenerate_return():
    # no jumps at all: the window holds mass 1e-12 * 2
    cfg = SimConfig(n=2, alpha=-1.0, b=1e12, mu=0.3, t0=1.0)
    out = simulate_dataset(cfg)
    assert np.all(out.tau == 0)
    np.testing.assert_allclose(out.x, 0.3)


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(alpha=0.5, b=0.0)
    with pytest.raises(ValueError):
        SimConfig(alpha=1.2)
    with pytest.raises(ValueError):
        SimConfig(betas=(0.1, 0.2))
    with pytest.raises(ValueError):
        SimConfig(n=0)
