import numpy as np
import pytest

from abcnet.core import ChainSample, GeneNetwork, RunConfig
from abcnet.diagnostics import (HISTOGRAM_BINS, gelman_rubin,
                                gelman_rubin_matrix, summarize)


def _sample(params, cid=0, it=1, rho=1.0):
    return ChainSample(GeneNetwork.from_params(np.asarray(params, float)),
                       rho, iteration=it, chain_id=cid)


def test_gelman_rubin_hand_value():
    # W = 1, B = 3 var([2, 3]) = 1.5, R = sqrt(2/3 + 1.5/3)
    got = gelman_rubin([[1.0, 2.0, 3.0], [2.0, 3.0, 4.0]])
    assert got == pytest.approx(np.sqrt(7.0 / 6.0), abs=1e-12)


def test_gelman_rubin_identical_chains():
    x = np.random.default_rng(0).standard_normal(50)
    got = gelman_rubin([x, x, x])
    assert got == pytest.approx(np.sqrt(49 / 50), abs=1e-12)


def test_gelman_rubin_degenerate_cases():
    assert gelman_rubin([[2.0, 2.0], [2.0, 2.0]]) == 1.0
    assert gelman_rubin([[1.0, 1.0], [5.0, 5.0]]) == float("inf")


def test_gelman_rubin_large_for_separated_chains():
    rng = np.random.default_rng(1)
    a = rng.normal(0, 1, 200)
    b = rng.normal(10, 1, 200)
    assert gelman_rubin([a, b]) > 3.0


def test_gelman_rubin_validation():
    with pytest.raises(ValueError):
        gelman_rubin([[1.0, 2.0]])
    with pytest.raises(ValueError):
        gelman_rubin([[1.0], [2.0]])


def test_gelman_rubin_matrix_matches_scalar_version():
    rng = np.random.default_rng(2)
    p = 2
    chains = []
    for cid in range(3):
        chain = []
        for it in range(20):
            theta = rng.normal(cid * 0.1, 1.0, (p, p))
            chain.append(_sample(theta, cid, it + 1))
        chains.append(chain)
    mat = gelman_rubin_matrix(chains, p)
    for i in range(p):
        for j in range(p):
            per = [[s.network.params[i, j] for s in c] for c in chains]
            assert mat[i, j] == pytest.approx(gelman_rubin(per), abs=1e-12)


def test_gelman_rubin_matrix_includes_structural_zeros():
    # the edge is present in only one chain; the zeros from the other
    # chain must enter the statistic rather than being dropped
    on = [_sample([[0.0, 1.0], [0.0, 0.0]], 0, it) for it in range(1, 11)]
    off = [_sample([[0.0, 0.0], [0.0, 0.0]], 1, it) for it in range(1, 11)]
    mat = gelman_rubin_matrix([on, off], 2)
    assert mat[0, 1] == float("inf")  # constant-but-different chains
    assert mat[0, 0] == 1.0


def test_gelman_rubin_matrix_needs_two_chains():
    chain = [_sample(np.eye(2), 0, it) for it in range(1, 5)]
    assert np.isnan(gelman_rubin_matrix([chain], 2)).all()


def test_summarize_requires_samples():
    with pytest.raises(ValueError):
        summarize([], RunConfig())


def _retained_fixture():
    # edge (0,1): present in all 10 samples, values 1..10 scaled
    # edge (1,0): present in 5 of 10
    # edge (0,0), (1,1): never present
    vals = np.linspace(0.1, 1.0, 10)
    out = []
    for k, v in enumerate(vals):
        theta = np.zeros((2, 2))
        theta[0, 1] = v
        if k < 5:
            theta[1, 0] = -0.5
        out.append(_sample(theta, 0, k + 1))
    return out


def test_summarize_presence_and_mean():
    s = summarize(_retained_fixture(), RunConfig())
    e = s.edge(0, 1)
    assert e.n_samples == 10
    assert e.presence == 1.0
    assert e.mean == pytest.approx(0.55)
    half = s.edge(1, 0)
    assert half.n_samples == 5
    assert half.presence == 0.5
    assert half.mean == pytest.approx(-0.5)


def test_summarize_ci_is_equal_tailed_over_present_samples():
    s = summarize(_retained_fixture(), RunConfig())
    e = s.edge(0, 1)
    x = np.linspace(0.1, 1.0, 10)
    lo, hi = e.ci(90)
    assert lo == pytest.approx(np.quantile(x, 0.05))
    assert hi == pytest.approx(np.quantile(x, 0.95))
    lo100, hi100 = e.ci(100)
    assert (lo100, hi100) == (0.1, 1.0)


def test_summarize_never_present_edge_degenerates():
    s = summarize(_retained_fixture(), RunConfig())
    e = s.edge(0, 0)
    assert e.never_present
    assert e.n_samples == 0
    assert e.ci(90) == (0.0, 0.0)
    assert e.rigidity == 1.0
    assert e.label == "rigid"


def test_summarize_histogram_and_rigidity():
    s = summarize(_retained_fixture(), RunConfig())
    e = s.edge(0, 1)
    assert e.histogram.shape == (HISTOGRAM_BINS,)
    assert e.histogram.sum() == pytest.approx(1.0)
    # mass only in the (0, 1] region of the (-2, 2) prior range
    assert e.histogram[: HISTOGRAM_BINS // 2].sum() == 0.0
    x = np.linspace(0.1, 1.0, 10)
    width = np.quantile(x, 0.95) - np.quantile(x, 0.05)
    assert e.rigidity == pytest.approx(1.0 - width / 4.0)


def test_summarize_labels():
    # a point-mass edge is rigid, a prior-wide edge is flexible
    rng = np.random.default_rng(3)
    out = []
    for k in range(200):
        theta = np.zeros((2, 2))
        theta[0, 1] = 1.0 + 1e-6 * rng.standard_normal()
        theta[1, 0] = rng.uniform(-2, 2)
        out.append(_sample(theta, 0, k + 1))
    s = summarize(out, RunConfig())
    assert s.edge(0, 1).label == "rigid"
    assert s.edge(1, 0).label == "flexible"


def test_summary_matrices():
    s = summarize(_retained_fixture(), RunConfig())
    assert s.rigidity_matrix().shape == (2, 2)
    assert s.mean_matrix()[0, 1] == pytest.approx(0.55)
    assert s.mean_matrix()[0, 0] == 0.0
