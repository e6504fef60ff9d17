import json

import numpy as np
import pytest

from phgs.eval import compare
from phgs.graph import PDAG, cpdag_of_dag, enumerate_equivalence_class, random_dag
from phgs.stats import CallCounter


def test_identity():
    rng = np.random.default_rng(0)
    dag = random_dag(7, 0.4, rng)
    rep = compare(cpdag_of_dag(dag), dag)
    assert rep.ji == 1.0 and rep.shd == 0 and rep.fp == 0 and rep.reversed == 0


def test_empty_estimate():
    truth = PDAG.from_edges(6, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)])
    rep = compare(PDAG(6), truth)
    assert rep.ji == 0.0 and rep.shd == 5 and rep.tp == 0 and rep.p_true == 5


def test_undirected_collider_estimate():
    truth = PDAG.from_edges(3, [(0, 2), (1, 2)])
    est = truth.skeleton()
    rep = compare(est, truth)
    assert (rep.tp, rep.ji, rep.shd, rep.reversed, rep.fp) == (0, 0.0, 2, 2, 0)


def test_counts_by_hand():
    # truth CPDAG: 0 -> 2 <- 1, 2 -> 3
    truth = PDAG.from_edges(4, [(0, 2), (1, 2), (2, 3)])
    est = PDAG.from_edges(4, [(0, 2), (3, 2)], undirected=[(0, 1)])
    rep = compare(est, truth)
    assert (rep.tp, rep.reversed, rep.fp, rep.p_est, rep.p_true) == (1, 1, 1, 3, 3)
    assert rep.shd == 3
    assert rep.ji == pytest.approx(1 / 5)


def test_equivalent_dags_same_report():
    truth = PDAG.from_edges(4, [(0, 1), (1, 2), (1, 3)])
    reports = {compare(m, truth).dumps() for m in enumerate_equivalence_class(truth)}
    assert len(reports) == 1


def test_symmetry_and_triangle_inequality():
    rng = np.random.default_rng(4)
    for _ in range(100):
        a, b, c = (random_dag(6, 0.4, rng) for _ in range(3))
        ab = compare(cpdag_of_dag(a), b)
        ba = compare(cpdag_of_dag(b), a)
        assert ab.ji == pytest.approx(ba.ji) and ab.shd == ba.shd
        assert ab.shd <= compare(cpdag_of_dag(a), c).shd + compare(cpdag_of_dag(c), b).shd


def test_serialization():
    c = CallCounter()
    c.add(ci_tests=5, score_calls=2)
    truth = PDAG.from_edges(3, [(0, 1)])
    rep = compare(truth, truth, c)
    obj = json.loads(rep.dumps())
    assert obj["calls"]["ci_tests"] == 5
    header, row = rep.tsv_header().rstrip("\n").split("\t"), rep.tsv_row().rstrip("\n").split("\t")
    assert dict(zip(header, row))["ci_tests"] == "5"
    assert dict(zip(header, row))["ji"] == "1.000000"


def test_size_mismatch():
    with pytest.raises(ValueError):
        compare(PDAG(3), PDAG(4))
