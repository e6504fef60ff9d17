import numpy as np
import pytest

from phgs.ci import DataCi, OracleCi
from phgs.clustering import Partition
from phgs.graph import PDAG, cpdag_of_dag, random_dag
from phgs.simulate import BayesNet, builtin, sample
from phgs.skeleton import pc, pc_skeleton, ppc
from phgs.stats import CallCounter

# 15-node example DAG with a three-cluster partition (1-based node names)
EXAMPLE_EDGES = [(1, 2), (3, 2), (2, 4), (2, 5), (3, 6), (4, 8), (5, 9), (7, 11), (8, 11),
                 (11, 10), (11, 13), (6, 12), (9, 12), (12, 14), (12, 15)]
EXAMPLE_CLUSTER = {1: 0, 2: 0, 3: 0, 4: 0, 5: 0, 7: 1, 8: 1, 10: 1, 11: 1, 13: 1,
                   6: 2, 9: 2, 12: 2, 14: 2, 15: 2}


def _one_based(g):
    return {(a + 1, b + 1) for a, b in g.adjacent_pairs()}


def _random_partition(p, rng):
    k = int(rng.integers(1, p + 1))
    raw = rng.integers(0, k, size=p).tolist()
    relabel = {c: i for i, c in enumerate(sorted(set(raw)))}
    return Partition([relabel[c] for c in raw], len(relabel), set())


def test_chain_separator():
    dag = PDAG.from_edges(3, [(0, 1), (1, 2)])
    res = pc_skeleton(OracleCi(dag), m=3)
    assert res.graph.adjacent_pairs() == [(0, 1), (1, 2)]
    assert res.record.sepset(0, 2) == frozenset({1})


def test_oracle_skeleton_small_dags():
    rng = np.random.default_rng(3)
    for _ in range(100):
        p = int(rng.integers(2, 7))
        dag = random_dag(p, 0.4, rng)
        res = pc_skeleton(OracleCi(dag), m=None)
        assert res.graph == dag.skeleton()


def test_no_duplicate_tests():
    dag = PDAG.from_edges(5, [(0, 2), (1, 2), (2, 3), (3, 4), (1, 4)])
    seen = []

    class Recording(OracleCi):
        def p_value(self, i, j, cond):
            seen.append((min(i, j), max(i, j), tuple(sorted(cond))))
            return super().p_value(i, j, cond)

    pc_skeleton(Recording(dag), m=None)
    assert len(seen) == len(set(seen))


def test_example_stages():
    dag = PDAG.from_edges(15, [(a - 1, b - 1) for a, b in EXAMPLE_EDGES])
    part = Partition([EXAMPLE_CLUSTER[i + 1] for i in range(15)], 3, set())
    res = ppc(OracleCi(dag), partition=part)
    true_skel = {tuple(sorted(e)) for e in EXAMPLE_EDGES}
    within = {e for e in true_skel if EXAMPLE_CLUSTER[e[0]] == EXAMPLE_CLUSTER[e[1]]} | {(6, 9)}
    assert _one_based(res.stages["within"]) == within
    screen1 = within | {(3, 6), (4, 8), (5, 9), (6, 8), (8, 9)}
    assert _one_based(res.stages["screen1"]) == screen1
    assert _one_based(res.stages["screen2"]) == screen1 - {(6, 8), (8, 9)}
    assert _one_based(res.stages["complete"]) == true_skel
    assert res.record.sepset(5, 8) == frozenset({2})
    assert res.cpdag == cpdag_of_dag(dag)


def test_partitioned_oracle_any_partition():
    rng = np.random.default_rng(11)
    for _ in range(150):
        p = int(rng.integers(4, 9))
        dag = random_dag(p, 0.3, rng)
        res = ppc(OracleCi(dag), m=None, partition=_random_partition(p, rng))
        assert res.cpdag == cpdag_of_dag(dag)


def test_stages_contain_true_skeleton_after_first_screen():
    rng = np.random.default_rng(5)
    for _ in range(60):
        p = int(rng.integers(4, 9))
        dag = random_dag(p, 0.35, rng)
        res = ppc(OracleCi(dag), m=None, partition=_random_partition(p, rng))
        truth = set(dag.skeleton().adjacent_pairs())
        for stage in ("screen1", "screen2", "complete"):
            assert truth <= set(res.stages[stage].adjacent_pairs())


def test_single_cluster_is_plain_pc():
    bn = builtin("asia")
    data = sample(bn, 3000, 2)
    c1, c2 = CallCounter(), CallCounter()
    a = ppc(DataCi(data, 0.05, c1), data, partition=Partition.single(data.p))
    b = pc(DataCi(data, 0.05, c2), data)
    assert a.cpdag == b.cpdag
    assert c1.ci_tests == c2.ci_tests


def test_collider_recovery_rate():
    dag = PDAG.from_edges(3, [(0, 2), (1, 2)])
    cpts = [np.array([[0.5, 0.5]]), np.array([[0.5, 0.5]]),
            np.array([[0.9, 0.1], [0.4, 0.6], [0.4, 0.6], [0.1, 0.9]])]
    bn = BayesNet(dag, [2, 2, 2], cpts)
    hits = 0
    for s in range(100):
        data = sample(bn, 25000, s)
        res = pc_skeleton(DataCi(data, 0.01))
        hits += res.graph == dag.skeleton()
    assert hits >= 95


@pytest.mark.parametrize("algo", [pc, ppc])
def test_column_permutation_invariance(algo):
    data = sample(builtin("asia"), 5000, 4)
    base = algo(DataCi(data, 0.05), data)
    rng = np.random.default_rng(9)
    for _ in range(5):
        perm = rng.permutation(data.p).tolist()
        res = algo(DataCi(data.permute_columns(perm), 0.05), data.permute_columns(perm))
        # column k of the permuted data is original column perm[k]
        assert res.skeleton.permuted(perm) == base.skeleton


def test_threads_do_not_change_results():
    data = sample(builtin("random10"), 4000, 1)
    c1, c4 = CallCounter(), CallCounter()
    a = ppc(DataCi(data, 0.05, c1), data, threads=1)
    b = ppc(DataCi(data, 0.05, c4), data, threads=4)
    assert a.cpdag == b.cpdag
    assert np.array_equal(a.record.phi, b.record.phi, equal_nan=True)
    assert c1.as_dict() == c4.as_dict()
