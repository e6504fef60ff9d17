"""Solution paths over p-value thresholds with BIC-based selection."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .dataset import Dataset
from .graph import (
    PDAG,
    SeparationRecord,
    detect_vstructures_from_sepsets,
    pdag_to_dag,
    semi_arbitrary_extension,
    skel_to_cpdag,
)
from .stats import CallCounter, ScoreCache, bic_lambda, family_score

# orienter(skeleton, record, threshold) -> PDAG
Orienter = Callable[[PDAG, SeparationRecord, float], PDAG]


def cpdag_orienter(skel: PDAG, rec: SeparationRecord, threshold: float) -> PDAG:
    return skel_to_cpdag(skel, detect_vstructures_from_sepsets(skel, rec, threshold))


def _pair_phis(rec: SeparationRecord, edges) -> np.ndarray:
    return np.array([rec.phi[i, j] for i, j in edges], dtype=float)


def threshold_sequence(rec: SeparationRecord, tau: int, alpha_min: float, edges) -> list[float]:
    """Decreasing thresholds whose edge counts are as evenly spaced as the order statistics allow.

    ``edges`` are the pairs connected in the densest estimate. The first
    threshold is their largest maximum p-value, the last is ``alpha_min``;
    each intermediate threshold is the order statistic whose edge count is
    closest to the evenly spaced target (ties go to the larger threshold).
    """
    if tau < 1:
        raise ValueError("tau must be >= 1")
    edges = list(edges)
    phis = _pair_phis(rec, edges)
    if len(phis) == 0:
        return [float(alpha_min)] * tau
    a1 = float(np.max(phis))
    if tau == 1:
        return [a1]
    a_min = min(float(alpha_min), a1)
    srt = np.sort(phis)

    def count(a):
        return int(np.searchsorted(srt, a, side="right"))

    e1, et = len(phis), count(a_min)
    step = (e1 - et) / (tau - 1)
    cands = sorted({float(v) for v in phis if a_min <= v <= a1}, reverse=True)
    out = [a1]
    for t in range(1, tau - 1):
        target = e1 - t * step
        best = None
        for a in cands:
            if a > out[-1]:
                continue
            gap = abs(count(a) - target)
            if best is None or gap < best[0]:
                best = (gap, a)
        out.append(best[1] if best is not None else out[-1])
    out.append(a_min)
    return out


@dataclass
class SolutionPath:
    thresholds: list[float]
    estimates: list[PDAG]
    extensions: list[PDAG]
    valid: list[bool]
    deltas: list[float]
    selected: int
    score_calls: int = 0
    scores: list[float] = field(default_factory=list)

    def __post_init__(self):
        if not self.scores:
            self.scores = list(np.cumsum(self.deltas)) if self.deltas else []

    @property
    def best(self) -> PDAG:
        return self.estimates[self.selected]

    @property
    def edge_counts(self) -> list[int]:
        return [g.n_edges for g in self.estimates]

    def to_json(self) -> dict:
        return {
            "selected": self.selected,
            "estimates": [
                {
                    "threshold": a,
                    "edge_count": g.n_edges,
                    "valid": v,
                    "cumulative_score": float(s),
                    "edges": g.to_edgelist(),
                }
                for a, g, v, s in zip(self.thresholds, self.estimates, self.valid, self.scores)
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1) + "\n"


def _delta(data, prev: PDAG, cur: PDAG, lam, cache, counter) -> float:
    """Score difference from decomposability: only families that changed are scored."""
    d = 0.0
    for i in range(cur.p):
        a, b = cur.parents(i), prev.parents(i)
        if a != b:
            d += family_score(data, i, a, lam, cache, counter) - family_score(data, i, b, lam, cache, counter)
    return d


def path_select(
    rec: SeparationRecord,
    data: Dataset,
    skeleton: PDAG,
    tau: int = 10,
    alpha_min: float = 1e-5,
    orienter: Orienter | None = None,
    extend: Callable[[PDAG], PDAG | None] | None = None,
    lam: float | None = None,
    cache: ScoreCache | None = None,
    counter: CallCounter | None = None,
    seed=0,
) -> SolutionPath:
    """Threshold the maximum p-values into ``tau`` estimates and select by score.

    ``extend`` maps an estimate to a DAG in its class or ``None`` when it has
    no consistent extension (default: Dor-Tarsi); invalid estimates are scored
    through a seeded semi-arbitrary extension. Selection is restricted to
    valid estimates when any exist; equal scores go to the earliest estimate.
    """
    orienter = orienter or cpdag_orienter
    extend = extend or pdag_to_dag
    cache = cache if cache is not None else ScoreCache()
    counter = counter if counter is not None else CallCounter()
    lam = bic_lambda(data.n) if lam is None else lam
    rng = np.random.default_rng(seed)
    start = counter.score_calls
    edges = skeleton.adjacent_pairs()
    alphas = threshold_sequence(rec, tau, alpha_min, edges)
    estimates, exts, valid, deltas = [], [], [], []
    for t, a in enumerate(alphas):
        skel = PDAG(skeleton.p)
        for i, j in edges:
            if rec.phi[i, j] <= a:
                skel.add_undirected(i, j)
        est = orienter(skel, rec, a)
        ext = extend(est)
        valid.append(ext is not None)
        if ext is None:
            ext = semi_arbitrary_extension(est, rng)
        estimates.append(est)
        exts.append(ext)
        deltas.append(0.0 if t == 0 else _delta(data, exts[t - 1], ext, lam, cache, counter))
    cum = list(np.cumsum(deltas))
    pool = [t for t in range(len(alphas)) if valid[t]] or list(range(len(alphas)))
    sel = pool[0]
    for t in pool[1:]:
        if cum[t] > cum[sel]:
            sel = t
    return SolutionPath(alphas, estimates, exts, valid, deltas, sel, counter.score_calls - start, cum)
