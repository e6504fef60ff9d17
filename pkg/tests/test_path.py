import itertools
import json

import numpy as np
import pytest

from phgs.ci import DataCi, OracleCi
from phgs.dataset import from_array
from phgs.graph import PDAG, SeparationRecord, cpdag_of_dag, pdag_to_dag
from phgs.path import path_select, threshold_sequence
from phgs.simulate import builtin, sample
from phgs.skeleton import pc_skeleton, ppc
from phgs.stats import CallCounter, graph_score

PHIS = [0.2, 0.15, 0.1, 0.05, 0.01]


def _record(p, values):
    rec = SeparationRecord(p)
    for (i, j), v in values.items():
        rec.update(i, j, (), v)
    return rec


def _five_edge_record():
    edges = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)]
    return _record(6, dict(zip(edges, PHIS))), edges


def _brute_force_counts(phis, tau, alpha_min):
    """Minimize total deviation from evenly spaced counts over all decreasing threshold choices."""
    srt = sorted(phis)
    a1 = max(phis)
    count = lambda a: sum(v <= a for v in srt)
    e1, et = count(a1), count(alpha_min)
    targets = [e1 - t * (e1 - et) / (tau - 1) for t in range(1, tau - 1)]
    best = None
    for combo in itertools.combinations_with_replacement(sorted(set(phis), reverse=True), tau - 2):
        dev = sum(abs(count(a) - tg) for a, tg in zip(combo, targets))
        if best is None or dev < best[0]:
            best = (dev, combo)
    return [e1] + [count(a) for a in best[1]] + [et]


def test_thresholds_endpoints_only():
    rec, edges = _five_edge_record()
    assert threshold_sequence(rec, 2, 0.01, edges) == [0.2, 0.01]


def test_thresholds_match_brute_force():
    rec, edges = _five_edge_record()
    alphas = threshold_sequence(rec, 5, 0.01, edges)
    counts = [sum(v <= a for v in PHIS) for a in alphas]
    assert counts == [5, 4, 3, 2, 1]
    assert counts == _brute_force_counts(PHIS, 5, 0.01)


def test_single_threshold():
    rec, edges = _five_edge_record()
    assert threshold_sequence(rec, 1, 0.01, edges) == [0.2]


def test_thresholds_random_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(40):
        k = int(rng.integers(3, 9))
        phis = sorted(set(np.round(rng.random(k) * 0.1, 4).tolist()))
        edges = [(i, i + 1) for i in range(len(phis))]
        rec = _record(len(phis) + 1, dict(zip(edges, phis)))
        tau = int(rng.integers(3, len(phis) + 2))
        alphas = threshold_sequence(rec, tau, min(phis), edges)
        counts = [sum(v <= a for v in phis) for a in alphas]
        dev = lambda cs: sum(abs(c - (cs[0] - t * (cs[0] - cs[-1]) / (tau - 1))) for t, c in enumerate(cs))
        assert dev(counts) == pytest.approx(dev(_brute_force_counts(phis, tau, min(phis))))


@pytest.fixture(scope="module")
def asia_run():
    data = sample(builtin("asia"), 20000, 3)
    res = ppc(DataCi(data, 0.1), data)
    return data, res


def test_monotone_edges_and_telescoping(asia_run):
    data, res = asia_run
    sp = path_select(res.record, data, res.skeleton, tau=6, alpha_min=1e-8)
    for a, b in zip(sp.estimates, sp.estimates[1:]):
        assert set(b.adjacent_pairs()) <= set(a.adjacent_pairs())
    direct = [graph_score(data, g) for g in sp.extensions]
    for t in range(len(direct)):
        for s in range(t):
            assert sp.scores[t] - sp.scores[s] == pytest.approx(direct[t] - direct[s], rel=1e-9, abs=1e-6)
    assert sp.scores[sp.selected] == max(sp.scores[t] for t in range(len(sp.scores)) if sp.valid[t])


def test_tau_one_is_input_estimate(asia_run):
    data, res = asia_run
    sp = path_select(res.record, data, res.skeleton, tau=1)
    assert sp.selected == 0 and sp.deltas == [0.0]
    assert sp.best == res.cpdag


def test_json_shape(asia_run):
    data, res = asia_run
    sp = path_select(res.record, data, res.skeleton, tau=4)
    obj = json.loads(sp.dumps())
    assert obj["selected"] == sp.selected
    assert [e["edge_count"] for e in obj["estimates"]] == sp.edge_counts
    assert PDAG.from_edgelist(obj["estimates"][0]["edges"]) == sp.estimates[0]


def test_separated_maxima_select_truth():
    # true edges get the smallest maxima, non-edges keep oracle separating sets
    bn = builtin("cancer")
    dag = bn.dag
    data = sample(bn, 20000, 1)
    oracle = pc_skeleton(OracleCi(dag), m=None).record
    rec = SeparationRecord(dag.p)
    true_pairs = dag.skeleton().adjacent_pairs()
    rank = 1
    for i, j in itertools.combinations(range(dag.p), 2):
        if (i, j) in true_pairs:
            rec.update(i, j, (), 1e-6 * rank)
        else:
            rec.update(i, j, oracle.sepset(i, j), 0.5 + 0.01 * rank)
        rank += 1
    n_pairs = dag.p * (dag.p - 1) // 2
    sp = path_select(rec, data, PDAG.complete(dag.p).skeleton(), tau=n_pairs + 1, alpha_min=0.0)
    truth = cpdag_of_dag(dag)
    assert truth in sp.estimates
    assert sp.best == truth


def test_all_invalid_returns_original_pdags():
    # an undirected chordless 4-cycle has no consistent extension
    skel = PDAG.from_edges(4, undirected=[(0, 1), (1, 2), (2, 3), (0, 3)])
    rec = _record(4, {e: 0.01 for e in skel.adjacent_pairs()})
    rng = np.random.default_rng(0)
    data_vals = rng.integers(0, 2, size=(500, 4))
    data = from_array(data_vals)
    counter = CallCounter()
    sp = path_select(rec, data, skel, tau=3, alpha_min=1.0,
                     orienter=lambda s, r, a: s.copy(), counter=counter, seed=5)
    assert pdag_to_dag(skel) is None
    assert sp.valid == [False, False, False]
    assert all(g == skel for g in sp.estimates)
    assert all(e.is_dag() and e.skeleton() == skel for e in sp.extensions)
    assert sp.best == skel
