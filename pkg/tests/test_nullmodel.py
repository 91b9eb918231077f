import numpy as np
import pytest

from ftnet import nullmodel
from ftnet.nullmodel import NullSpec, compare, gen_er

import oracles


def edge_pairs(net):
    keys = net.keys
    return keys >> 32, keys & 0xFFFFFFFF


@pytest.mark.parametrize("n", [2, 3, 7, 50, 1001])
def test_decode_pairs_inverts_linear_index(n):
    u, v = np.triu_indices(n, 1)
    du, dv = nullmodel._decode_pairs(np.arange(len(u)), n)
    assert np.array_equal(du, u) and np.array_equal(dv, v)


@pytest.mark.parametrize("n,m", [(100, 0), (100, 40), (100, 2000), (100, 4950), (5000, 25_000)])
def test_exact_simple_graph(n, m):
    g = gen_er(NullSpec(n, m, seed=3))
    u, v = edge_pairs(g)
    assert g.N == n and g.E == m and g.W == m
    assert np.all(u < v) and np.all(v < n)
    assert len(np.unique(g.keys)) == m


def test_reproducible_and_replicate_dependent():
    spec = NullSpec(500, 1500, seed=8)
    a, b = gen_er(spec, 1), gen_er(spec, 1)
    assert np.array_equal(a.keys, b.keys)
    assert not np.array_equal(a.keys, gen_er(spec, 2).keys)


def test_pair_frequencies_are_uniform():
    # every pair of a 6-node graph with 5 edges should appear 1/3 of the time
    spec_pairs = np.zeros(15)
    for r in range(3000):
        g = gen_er(NullSpec(6, 5, seed=1), r)
        u, v = edge_pairs(g)
        spec_pairs[u * 6 - u * (u + 1) // 2 + v - u - 1] += 1
    assert np.allclose(spec_pairs / 3000, 1 / 3, atol=0.04)


def test_spec_validation():
    with pytest.raises(ValueError):
        NullSpec(4, 7)
    with pytest.raises(ValueError):
        NullSpec(-1, 0)
    with pytest.raises(ValueError):
        NullSpec(4, 2, replicates=0)


def test_compare_report_shape():
    rng = np.random.default_rng(1)
    n, edges = oracles.random_graph(rng, 60, 40)
    net = oracles.network(n, edges)
    rep = compare(net, NullSpec.matching(net, replicates=3, seed=2))
    d = rep.to_dict()
    assert set(d["metrics"]) == {"C", "L", "D", "k_max"}
    for entry in d["metrics"].values():
        assert set(entry) == {"real", "rand_mean", "rand_sd", "ratio"}
    assert d["metrics"]["k_max"]["real"] == net.degrees.max()
    assert rep.to_json() == compare(net, NullSpec.matching(net, 3, 2)).to_json()
