import numpy as np
import pytest

from phgs.ci import DataCi
from phgs.dataset import from_array
from phgs.graph import PDAG, cpdag_of_dag, detect_vstructures_from_sepsets, vstructures
from phgs.hgi import hgi
from phgs.search import TabuConfig, gsc, hgi_hc, hill_climb, phgs
from phgs.simulate import builtin, random_bayes_net, sample
from phgs.skeleton import ppc
from phgs.stats import graph_score

GREEDY = TabuConfig(0, 0)


def _pair_data(seed=0, n=2000):
    rng = np.random.default_rng(seed)
    a = rng.integers(0, 2, n)
    b = (a + (rng.random(n) < 0.2)) % 2
    return from_array(np.column_stack([a, b]))


def test_two_node_tie_rule():
    data = _pair_data()
    for tabu in (GREEDY, TabuConfig()):
        g = hill_climb(data, None, [(0, 1)], tabu=tabu)
        assert g == PDAG.from_edges(2, [(0, 1)])


def test_empty_candidates():
    data = sample(builtin("asia"), 2000, 0)
    assert hill_climb(data, None, []) == PDAG(data.p)
    init = builtin("asia").dag
    out = hill_climb(data, init, [])
    assert set(out.skeleton().adjacent_pairs()) <= set(init.skeleton().adjacent_pairs())
    assert out.is_dag()


def test_truth_start_stays_in_class():
    hits = 0
    for s in range(10):
        bn = random_bayes_net(8, 0.3, 40 + s, max_card=3, max_parents=3, min_effect=0.2)
        data = sample(bn, 25000, s)
        out = hill_climb(data, bn.dag, bn.dag.skeleton().adjacent_pairs())
        assert graph_score(data, out) >= graph_score(data, bn.dag) - 1e-9
        hits += cpdag_of_dag(out) == cpdag_of_dag(bn.dag)
    assert hits >= 9


def test_tabu_not_worse_than_greedy():
    for s in range(5):
        bn = random_bayes_net(7, 0.4, s, max_card=3, max_parents=3)
        data = sample(bn, 1500, s)
        greedy = hill_climb(data, tabu=GREEDY)
        tabu = hill_climb(data, tabu=TabuConfig(30, 30))
        assert graph_score(data, tabu) >= graph_score(data, greedy) - 1e-9


def test_candidates_respected_and_deterministic():
    bn = builtin("random10")
    data = sample(bn, 3000, 2)
    cands = bn.dag.skeleton().adjacent_pairs()
    a = gsc(data, bn.dag.skeleton())
    b = hill_climb(data, None, cands)
    assert a == b
    assert set(a.skeleton().adjacent_pairs()) <= set(cands)


def test_hgi_start_not_worse_than_hgi():
    bn = builtin("random10")
    data = sample(bn, 3000, 3)
    start = hgi(bn.dag.skeleton(), data, vstructures(bn.dag))
    out = hgi_hc(data, bn.dag.skeleton(), vstructures(bn.dag))
    assert graph_score(data, out) >= graph_score(data, start) - 1e-9


def test_rejects_cyclic_start():
    data = _pair_data()
    cyc = PDAG(2)
    cyc.add_undirected(0, 1)
    with pytest.raises(ValueError):
        hill_climb(data, cyc)


def test_phgs_pipeline():
    bn = builtin("asia")
    data = sample(bn, 10000, 1)
    res = phgs(data, seed=0)
    assert res.dag.is_dag()
    a1 = res.path.thresholds[0]
    for i, j in res.dag.skeleton().adjacent_pairs():
        assert res.ppc.record.phi[i, j] <= a1
    again = phgs(data, seed=0, threads=3)
    assert again.dag == res.dag
    assert again.counter.as_dict() == res.counter.as_dict()


def test_phgs_tau_one_is_restricted_hgi_climb():
    bn = builtin("asia")
    data = sample(bn, 10000, 2)
    res = phgs(data, tau=1)
    sk = ppc(DataCi(data, 0.05), data)
    a1 = res.path.thresholds[0]
    cands = [(i, j) for i in range(data.p) for j in range(i + 1, data.p) if sk.record.phi[i, j] <= a1]
    start = hgi(sk.skeleton, data, detect_vstructures_from_sepsets(sk.skeleton, sk.record, a1))
    assert res.path.best == start
    assert res.dag == hill_climb(data, start, cands)
