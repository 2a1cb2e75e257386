import numpy as np
import pytest
from scipy.special import logsumexp

from ghsv.inference.crp import crp_predictive_weights, crp_sample, crp_tree
from ghsv.levy import GenGammaFamily
from ghsv.ou_kernel import KernelTables, OuKernel
from ghsv.partitions import Partition, enumerate_partitions


def target(k, w):
    tab = KernelTables(k, w, emax=k.n)
    lp = {p: sum(tab.log_theta(c) for c in p.cells) for p in enumerate_partitions(k.n)}
    z = logsumexp(list(lp.values()))
    return {p: np.exp(v - z) for p, v in lp.items()}


@pytest.fixture
def setup():
    k = OuKernel(0.7, 1.0, 3, GenGammaFamily(0.5, 1.0))
    return k, np.array([0.4, 2.0, 1.1])


def test_first_index_opens_new_cell(setup):
    k, w = setup
    l = crp_predictive_weights(k, w, [], r=0)
    assert l.shape == (1,)
    assert l[0] / l.sum() == 1.0


def test_weights_nonnegative(setup):
    k, w = setup
    l = crp_predictive_weights(k, w, Partition([[1], [2]]))
    assert l.shape == (3,) and np.all(l >= 0) and l.sum() > 0
    tab = KernelTables(k, w)
    np.testing.assert_allclose(
        np.log(l[1]), tab.log_theta([1, 3]) - tab.log_theta([1]), rtol=1e-12)


def test_uncollapsed_weights(setup):
    k, w = setup
    l = crp_predictive_weights(k, w, [[1]], jumps=[2.0], locations=[0.5])
    assert l[1] == pytest.approx(2.0 * k.g_weight(2, 0.5))
    with pytest.raises(ValueError):
        crp_predictive_weights(k, w, [[1], [2], [3]])


def test_tree_reproduces_posterior(setup):
    k, w = setup
    tree = crp_tree(k, w)
    tgt = target(k, w)
    assert set(tree) == set(tgt)
    lw = np.array([v[1] for v in tree.values()])
    lq = np.array([v[0] for v in tree.values()])
    assert np.exp(logsumexp(lq)) == pytest.approx(1.0, abs=1e-12)
    # importance-weighted leaves give the enumerated posterior
    post = np.exp(lq + lw - logsumexp(lq + lw))
    tv = 0.5 * sum(abs(pv - tgt[p]) for p, pv in zip(tree, post))
    assert tv < 1e-6


def test_sequential_sampler_importance_weights(setup):
    k, w = setup
    gen = np.random.default_rng(3)
    tgt = target(k, w)
    draws = [crp_sample(k, w, gen) for _ in range(4000)]
    lw = np.array([d[1] for d in draws])
    wt = np.exp(lw - lw.max())
    wt /= wt.sum()
    for p, tp in tgt.items():
        est = wt[[d[0] == p for d in draws]].sum()
        assert abs(est - tp) < 0.03
