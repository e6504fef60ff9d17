"""PC-stable skeleton search and the partitioned PC (pPC) pipeline."""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .ci import DataCi
from .clustering import Partition, cluster, distance_matrix
from .dataset import Dataset
from .graph import PDAG, SeparationRecord, detect_vstructures_from_sepsets, skel_to_cpdag
from .stats import CallCounter

Restrict = Callable[[int, int, tuple], bool]


@dataclass
class SkeletonResult:
    graph: PDAG
    record: SeparationRecord
    counter: CallCounter


@dataclass
class PpcResult:
    cpdag: PDAG
    skeleton: PDAG
    record: SeparationRecord
    partition: Partition
    counter: CallCounter
    stages: dict = field(default_factory=dict)


def _map_ordered(fn, items, threads: int):
    """Apply ``fn`` to every item, returning results in input order."""
    if threads <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _test_sets(ci, i, j, sets):
    """Test the sets in order until the first independence.

    Returns the list of (set, p-value) evaluated and whether a separation was found.
    """
    done = []
    for k in sets:
        pv = ci.p_value(i, j, k)
        done.append((k, pv))
        if pv > ci.alpha:
            return done, True
    return done, False


def _level_sets(frozen: PDAG, i: int, j: int, size: int, restrict: Restrict | None):
    seen = set()
    for side in (sorted(frozen.neighbors(i) - {j}), sorted(frozen.neighbors(j) - {i})):
        for k in itertools.combinations(side, size):
            if k in seen:
                continue
            seen.add(k)
            if restrict is None or restrict(i, j, k):
                yield k


def pc_skeleton(
    ci,
    m: int | None = 3,
    init: PDAG | None = None,
    start_level: int = 0,
    restrict: Restrict | None = None,
    rec: SeparationRecord | None = None,
    threads: int = 1,
) -> SkeletonResult:
    """Order-independent PC skeleton search.

    Adjacencies are frozen at the start of every level, so the result does not
    depend on the order pairs are visited; pairs within a level can therefore
    run concurrently and are merged in ascending order. Every test updates the
    separation record, whether or not it separates.
    """
    p = ci.p
    g = PDAG.complete(p) if init is None else init.copy()
    if not g.is_undirected():
        raise ValueError("initial graph must be undirected")
    rec = SeparationRecord(p) if rec is None else rec
    level = start_level
    while m is None or level <= m:
        frozen = g.copy()
        pairs = [
            (i, j)
            for i, j in frozen.adjacent_pairs()
            if max(frozen.degree(i), frozen.degree(j)) - 1 >= level
        ]
        if not pairs:
            break

        def work(pair, frozen=frozen, level=level):
            i, j = pair
            return _test_sets(ci, i, j, _level_sets(frozen, i, j, level, restrict))

        for (i, j), (done, separated) in zip(pairs, _map_ordered(work, pairs, threads)):
            for k, pv in done:
                rec.update(i, j, k, pv)
            if separated:
                g.remove_edge(i, j)
        level += 1
    return SkeletonResult(g, rec, ci.counter)


def _capped_sets(s: set, m: int | None) -> list[tuple]:
    s = tuple(sorted(s))
    if m is None or len(s) <= m:
        return [s]
    return list(itertools.combinations(s, m))


def _marginal_pvalues(ci, data: Dataset | None) -> np.ndarray:
    """Unconditional p-values for all pairs.

    With data-backed tests these come from the mutual-information pass (the
    G-squared statistic equals 2n times the mutual information); otherwise
    each pair is tested with the empty set.
    """
    p = ci.p
    if isinstance(ci, DataCi) and data is not None:
        return distance_matrix(data, ci.alpha, ci.counter).pvalues
    pv = np.ones((p, p))
    for i, j in itertools.combinations(range(p), 2):
        pv[i, j] = pv[j, i] = ci.p_value(i, j, ())
    return pv


def ppc(
    ci,
    data: Dataset | None = None,
    m: int | None = 3,
    partition: Partition | None = None,
    threads: int = 1,
) -> PpcResult:
    """Partitioned PC.

    Without an explicit ``partition`` the nodes are clustered from ``data``;
    with one, the marginal pass is still run to build the blacklist. Passing
    ``Partition.single(p)`` reproduces plain PC-stable.
    """
    p = ci.p
    counter = ci.counter
    rec = SeparationRecord(p)
    if partition is None:
        if data is None:
            raise ValueError("ppc needs data to cluster or an explicit partition")
        partition, dist = cluster(data, ci.alpha, counter)
        pv = dist.pvalues
    else:
        pv = _marginal_pvalues(ci, data)
    labels = partition.labels
    blacklist = set()
    for i, j in itertools.combinations(range(p), 2):
        rec.update(i, j, (), float(pv[i, j]))
        if pv[i, j] > ci.alpha:
            blacklist.add((i, j))
    partition = Partition(list(labels), partition.kappa, blacklist)
    stages = {}

    # within clusters, starting at level 1
    init = PDAG(p)
    for i, j in itertools.combinations(range(p), 2):
        if labels[i] == labels[j] and (i, j) not in blacklist:
            init.add_undirected(i, j)
    g = pc_skeleton(ci, m, init, start_level=1, rec=rec, threads=threads).graph
    stages["within"] = g.copy()

    tested: dict[tuple[int, int], set] = {}
    between = [
        (i, j)
        for i, j in itertools.combinations(range(p), 2)
        if labels[i] != labels[j] and (i, j) not in blacklist
    ]

    # screen 1: connect between pairs that stay dependent given the union of neighborhoods
    frozen = g.copy()

    def screen_one(pair):
        i, j = pair
        union = (frozen.neighbors(i) | frozen.neighbors(j)) - {i, j}
        sets = [k for k in _capped_sets(union, m) if k]
        return sets, _test_sets(ci, i, j, sets)

    for (i, j), (sets, (done, separated)) in zip(between, _map_ordered(screen_one, between, threads)):
        tested[(i, j)] = {frozenset(k) for k in sets}
        for k, pv_k in done:
            rec.update(i, j, k, pv_k)
        if not separated:
            g.add_undirected(i, j)
    stages["screen1"] = g.copy()

    # screen 2: prune between edges separated by either endpoint's neighborhood
    frozen = g.copy()
    edges = [(i, j) for i, j in between if frozen.adjacent(i, j)]

    def screen_two(pair):
        i, j = pair
        sets = []
        seen = {frozenset(k) for k in tested[pair]}
        for side in (frozen.neighbors(i) - {j}, frozen.neighbors(j) - {i}):
            for k in _capped_sets(side, m):
                if k and frozenset(k) not in seen:
                    seen.add(frozenset(k))
                    sets.append(k)
        return sets, _test_sets(ci, i, j, sets)

    for (i, j), (sets, (done, separated)) in zip(edges, _map_ordered(screen_two, edges, threads)):
        tested[(i, j)].update(frozenset(k) for k in sets)
        for k, pv_k in done:
            rec.update(i, j, k, pv_k)
        if separated:
            g.remove_edge(i, j)
    stages["screen2"] = g.copy()

    def restrict(i, j, k):
        if labels[i] == labels[j]:
            return any(labels[x] != labels[i] for x in k)
        return frozenset(k) not in tested.get((i, j), ())

    g = pc_skeleton(ci, m, g, start_level=1, restrict=restrict, rec=rec, threads=threads).graph
    stages["complete"] = g.copy()
    vs = detect_vstructures_from_sepsets(g, rec, ci.alpha)
    cpdag = skel_to_cpdag(g, vs)
    return PpcResult(cpdag, g, rec, partition, counter, stages)


def pc(ci, data: Dataset | None = None, m: int | None = 3, threads: int = 1) -> PpcResult:
    """PC-stable, run as pPC with a single cluster."""
    return ppc(ci, data, m, Partition.single(ci.p), threads)
