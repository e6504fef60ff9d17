"""Tabu hill-climbing over DAGs, sparse-candidate restriction, and the full pHGS pipeline."""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass

from .ci import DataCi
from .dataset import Dataset
from .graph import PDAG, detect_vstructures_from_sepsets
from .hgi import hgi
from .path import SolutionPath, path_select
from .skeleton import PpcResult, ppc
from .stats import CallCounter, ScoreCache, bic_lambda, family_score

_ADD, _DEL, _REV = 0, 1, 2
IMPROVEMENT_TOL = 1e-9


@dataclass(frozen=True)
class TabuConfig:
    t0: int = 100
    t1: int = 100

    def __post_init__(self):
        if self.t0 < 0 or self.t1 < 0:
            raise ValueError("tabu parameters must be non-negative")


def _pairs(candidates, p):
    if candidates is None:
        return list(itertools.combinations(range(p), 2))
    out = set()
    for i, j in candidates:
        if i == j:
            raise ValueError("self-pair in candidate set")
        out.add((min(i, j), max(i, j)))
    return sorted(out)


def hill_climb(
    data: Dataset,
    init: PDAG | None = None,
    candidates=None,
    lam: float | None = None,
    tabu: TabuConfig = TabuConfig(),
    cache: ScoreCache | None = None,
    counter: CallCounter | None = None,
) -> PDAG:
    """Best-improvement hill-climbing with a tabu continuation.

    Neighbors are single-edge additions (only on ``candidates`` pairs, or any
    pair when ``candidates`` is None), deletions and reversals that keep the
    graph acyclic. Once no move improves, up to ``tabu.t0`` consecutive
    non-improving moves are taken, never revisiting one of the last
    ``tabu.t1`` DAGs. The best DAG seen is returned.
    """
    p = data.p
    g = PDAG(p) if init is None else init.copy()
    if not g.is_dag():
        raise ValueError("hill_climb needs an acyclic, fully directed start")
    lam = bic_lambda(data.n) if lam is None else lam
    cache = cache if cache is not None else ScoreCache()
    pairs = _pairs(candidates, p)
    memo: dict = {}

    def fam(i, pa):
        key = (i, frozenset(pa))
        v = memo.get(key)
        if v is None:
            v = memo[key] = family_score(data, i, pa, lam, cache, counter)
        return v

    edges = set(g.directed_edges())
    cur = sum(fam(i, g.parents(i)) for i in range(p))
    best_score, best = cur, g.copy()
    visited = deque([frozenset(edges)], maxlen=max(tabu.t1, 1))
    stale = 0
    while True:
        moves = []
        for i, j in pairs:
            if g.adjacent(i, j):
                continue
            for a, b in ((i, j), (j, i)):
                pb = g.parents(b)
                moves.append((fam(b, pb | {a}) - fam(b, pb), _ADD, a, b))
        for a, b in edges:
            pb, pa = g.parents(b), g.parents(a)
            d_del = fam(b, pb - {a}) - fam(b, pb)
            moves.append((d_del, _DEL, a, b))
            moves.append((d_del + fam(a, pa | {b}) - fam(a, pa), _REV, a, b))
        moves.sort(key=lambda m: (-round(m[0], 9), m[1], min(m[2], m[3]), max(m[2], m[3]), m[2] > m[3]))
        chosen = None
        for delta, kind, a, b in moves:
            if kind == _ADD:
                if g.reaches(b, a):
                    continue
                nxt = edges | {(a, b)}
            elif kind == _DEL:
                nxt = edges - {(a, b)}
            else:
                g.remove_edge(a, b)
                cyclic = g.reaches(a, b)
                g.add_directed(a, b)
                if cyclic:
                    continue
                nxt = (edges - {(a, b)}) | {(b, a)}
            sig = frozenset(nxt)
            if tabu.t1 > 0 and sig in visited:
                continue
            chosen = (delta, kind, a, b, sig)
            break
        if chosen is None:
            break
        delta, kind, a, b, sig = chosen
        improves = cur + delta > best_score + IMPROVEMENT_TOL * max(1.0, abs(best_score))
        if not improves and stale >= tabu.t0:
            break
        if kind == _ADD:
            g.add_directed(a, b)
        elif kind == _DEL:
            g.remove_edge(a, b)
        else:
            g.remove_edge(a, b)
            g.add_directed(b, a)
        edges = set(sig)
        cur += delta
        visited.append(sig)
        if improves:
            best_score, best, stale = cur, g.copy(), 0
        else:
            stale += 1
    return best


def gsc(
    data: Dataset,
    skeleton: PDAG,
    lam: float | None = None,
    tabu: TabuConfig = TabuConfig(),
    cache: ScoreCache | None = None,
    counter: CallCounter | None = None,
) -> PDAG:
    """Hill-climbing from the empty graph restricted to the skeleton's adjacencies."""
    return hill_climb(data, None, skeleton.adjacent_pairs(), lam, tabu, cache, counter)


def hgi_hc(
    data: Dataset,
    skeleton: PDAG,
    vstructs,
    lam: float | None = None,
    tabu: TabuConfig = TabuConfig(),
    cache: ScoreCache | None = None,
    counter: CallCounter | None = None,
) -> PDAG:
    """Hill-climbing restricted to the skeleton, started from the HGI orientation."""
    cache = cache if cache is not None else ScoreCache()
    init = hgi(skeleton, data, vstructs, lam, cache, counter)
    return hill_climb(data, init, skeleton.adjacent_pairs(), lam, tabu, cache, counter)


@dataclass
class PhgsResult:
    dag: PDAG
    path: SolutionPath
    ppc: PpcResult
    counter: CallCounter


def phgs(
    data: Dataset,
    alpha: float = 0.05,
    tau: int = 10,
    alpha_min: float = 1e-5,
    m: int | None = 3,
    lam: float | None = None,
    tabu: TabuConfig = TabuConfig(),
    seed=0,
    threads: int = 1,
    counter: CallCounter | None = None,
) -> PhgsResult:
    """pPC skeleton, PATH over HGI-oriented estimates, then restricted tabu hill-climbing."""
    counter = counter if counter is not None else CallCounter()
    lam = bic_lambda(data.n) if lam is None else lam
    cache = ScoreCache()
    res = ppc(DataCi(data, alpha, counter), data, m, threads=threads)

    def orient(skel, rec, a):
        return hgi(skel, data, detect_vstructures_from_sepsets(skel, rec, a), lam, cache, counter)

    path = path_select(
        res.record, data, res.skeleton, tau, alpha_min,
        orienter=orient, extend=lambda g: g, lam=lam, cache=cache, counter=counter, seed=seed,
    )
    a1 = path.thresholds[0]
    cands = [(i, j) for i, j in itertools.combinations(range(data.p), 2) if res.record.phi[i, j] <= a1]
    dag = hill_climb(data, path.best, cands, lam, tabu, cache, counter)
    return PhgsResult(dag, path, res, counter)
