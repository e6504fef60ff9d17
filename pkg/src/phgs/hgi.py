"""Hybrid greedy initialization: score-ordered orientation of a skeleton into a DAG."""

from __future__ import annotations

from typing import Iterable

from .dataset import Dataset
from .graph import PDAG, VStructure, _is_candidate_sink, meek_compelled
from .stats import CallCounter, ScoreCache, bic_lambda, family_score


class _Scorer:
    """Family-score deltas against the parent sets of the committed DAG."""

    def __init__(self, data, lam, cache, counter):
        self.data, self.lam, self.cache, self.counter = data, lam, cache, counter

    def fam(self, i, parents) -> float:
        return family_score(self.data, i, parents, self.lam, self.cache, self.counter)

    def gain(self, g: PDAG, child: int, new_parents: Iterable[int]) -> float:
        pa = g.parents(child)
        return self.fam(child, pa | set(new_parents)) - self.fam(child, pa)


def _remove_complete_sinks(g0: PDAG) -> None:
    changed = True
    while changed:
        changed = False
        for j in range(g0.p):
            if g0._pa[j] and not g0._ch[j] and not g0._und[j]:
                g0.remove_node_edges(j)
                changed = True


def _commit(g0: PDAG, g: PDAG, i: int, j: int) -> None:
    if g0.has_undirected(i, j):
        g0.orient(i, j)
    if not g.has_directed(i, j):
        g.add_directed(i, j)


def _best(cands):
    """Argmax of (delta, key) with ties to the smallest key."""
    best = None
    for delta, key in cands:
        if best is None or delta > best[0] or (delta == best[0] and key < best[1]):
            best = (delta, key)
    return best


def _worst(cands):
    best = None
    for delta, key in cands:
        if best is None or delta < best[0] or (delta == best[0] and key < best[1]):
            best = (delta, key)
    return best


def hgi(
    skeleton: PDAG,
    data: Dataset,
    vstructs: Iterable[VStructure],
    lam: float | None = None,
    cache: ScoreCache | None = None,
    counter: CallCounter | None = None,
) -> PDAG:
    """Greedy v-structure application followed by greedy decomposed sink elimination.

    Returns the DAG of committed orientations; undirected edges that are never
    decided are dropped.
    """
    if not skeleton.is_undirected():
        raise ValueError("hgi expects an undirected skeleton")
    lam = bic_lambda(data.n) if lam is None else lam
    cache = cache if cache is not None else ScoreCache()
    sc = _Scorer(data, lam, cache, counter)
    g0 = skeleton.copy()
    g = PDAG(skeleton.p)

    pending = sorted(set(tuple(v) for v in vstructs))
    while pending:
        cands = []
        for i, k, j in pending:
            if not (g0.adjacent(i, k) and g0.adjacent(j, k)):
                continue
            if g.has_directed(k, i) or g.has_directed(k, j):
                continue
            need = [a for a in (i, j) if not g.has_directed(a, k)]
            if not need or any(g.reaches(k, a) for a in need):
                continue
            cands.append((sc.gain(g, k, need), (i, k, j)))
        best = _best(cands)
        if best is None or not best[0] > 0:
            break
        i, k, j = best[1]
        _commit(g0, g, i, k)
        _commit(g0, g, j, k)
        pending.remove(best[1])

    while True:
        _remove_complete_sinks(g0)
        sink_moves = [
            (k, j)
            for j in range(g0.p)
            if g0._und[j] and _is_candidate_sink(g0, j)
            for k in sorted(g0._und[j])
        ]
        if sink_moves:
            cands = [(sc.gain(g, j, (k,)), (k, j)) for k, j in sink_moves]
            best = _best(cands)
            if best[0] > 0:
                _commit(g0, g, *best[1])
            else:
                g0.remove_edge(*_worst(cands)[1])
            continue
        compelled = meek_compelled(g0)
        if not compelled:
            break
        cands = [(sc.gain(g, y, (x,)), (x, y)) for x, y in compelled]
        acyclic = [c for c in cands if not g.reaches(c[1][1], c[1][0])]
        best = _best(acyclic)
        if best is not None and best[0] > 0:
            _commit(g0, g, *best[1])
        else:
            g0.remove_edge(*_worst(cands)[1])
    return g
