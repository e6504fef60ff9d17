"""Mutual-information distances, marginal blacklist and adaptive node partitioning."""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil

import numpy as np

from .dataset import Dataset
from .stats import CallCounter, chi2_sf, entropy, mutual_information

MAX_CLUSTERS = 20
LARGE_FRACTION = 0.05
TIE_DECIMALS = 12


@dataclass
class Distances:
    d: np.ndarray
    blacklist: set[tuple[int, int]]
    pvalues: np.ndarray
    mi: np.ndarray


@dataclass
class Partition:
    labels: list[int]
    kappa: int
    blacklist: set[tuple[int, int]]

    def members(self, c: int) -> list[int]:
        return [i for i, lab in enumerate(self.labels) if lab == c]

    @classmethod
    def single(cls, p: int, blacklist=frozenset()) -> "Partition":
        return cls([0] * p, 1, set(blacklist))


def distance_matrix(data: Dataset, alpha: float, counter: CallCounter | None = None) -> Distances:
    """Normalized MI distance 1 - I/H(joint) plus the marginal-independence blacklist.

    Uses p marginal entropies and p(p-1)/2 mutual informations; joint entropies
    follow from H(i, j) = H(i) + H(j) - I(i, j). A pair is blacklisted when the
    unconditional G-squared p-value, computed from 2n * I, exceeds ``alpha``.
    """
    p, n = data.p, data.n
    h = np.array([entropy(data, i, counter) for i in range(p)])
    d = np.zeros((p, p))
    mi = np.zeros((p, p))
    pv = np.ones((p, p))
    blacklist = set()
    for i in range(p):
        mi[i, i] = h[i]
        for j in range(i + 1, p):
            val = max(mutual_information(data, i, j, counter), 0.0)
            joint = h[i] + h[j] - val
            dist = 1.0 - val / joint if joint > 0 else 0.0
            d[i, j] = d[j, i] = min(max(dist, 0.0), 1.0)
            mi[i, j] = mi[j, i] = val
            df = (data.cardinalities[i] - 1) * (data.cardinalities[j] - 1)
            pval = chi2_sf(2.0 * n * val, df)
            pv[i, j] = pv[j, i] = pval
            if pval > alpha:
                blacklist.add((i, j))
    return Distances(d, blacklist, pv, mi)


def _average_linkage(d: np.ndarray) -> list[list[list[int]]]:
    """Agglomerative average-linkage clustering.

    Returns the clusterings at every level, from p singletons down to one
    cluster. Ties, up to rounding noise in the linkage updates, go to the pair
    with the smallest (min member, min member).
    """
    p = d.shape[0]
    clusters: dict[int, list[int]] = {i: [i] for i in range(p)}
    dist = {(i, j): float(d[i, j]) for i in range(p) for j in range(i + 1, p)}
    levels = [[list(c) for c in clusters.values()]]
    while len(clusters) > 1:
        (a, b), _ = min(dist.items(), key=lambda kv: (round(kv[1], TIE_DECIMALS), kv[0]))
        na, nb = len(clusters[a]), len(clusters[b])
        merged = sorted(clusters[a] + clusters[b])
        del clusters[a], clusters[b]
        new_dist = {}
        for (x, y), v in dist.items():
            if a in (x, y) or b in (x, y):
                continue
            new_dist[(x, y)] = v
        key = merged[0]
        for k in clusters:
            dak = dist[(min(a, k), max(a, k))]
            dbk = dist[(min(b, k), max(b, k))]
            new_dist[(min(key, k), max(key, k))] = (na * dak + nb * dbk) / (na + nb)
        clusters[key] = merged
        dist = new_dist
        levels.append(sorted((list(c) for c in clusters.values()), key=lambda c: c[0]))
    return levels


def _linkage(d: np.ndarray, a: list[int], b: list[int]) -> float:
    return float(d[np.ix_(a, b)].mean())


def partition(d: np.ndarray, blacklist=frozenset(), max_clusters: int = MAX_CLUSTERS) -> Partition:
    """Cut the average-linkage dendrogram and absorb small clusters.

    The cut is the highest one that maximizes the number of clusters of size at
    least ceil(0.05 p), among cuts with at most ``max_clusters`` such clusters.
    Remaining small clusters are merged, smallest first, into the cluster with
    the lowest average linkage until every cluster is large.
    """
    d = np.asarray(d, dtype=float)
    p = d.shape[0]
    if p == 1:
        return Partition([0], 1, set(blacklist))
    min_size = max(1, ceil(LARGE_FRACTION * p))
    levels = _average_linkage(d)
    best = None
    # levels run from p clusters down to 1; iterate from the highest cut
    for clusters in reversed(levels):
        n_large = sum(len(c) >= min_size for c in clusters)
        if n_large > max_clusters:
            continue
        if best is None or n_large > best[0]:
            best = (n_large, clusters)
    clusters = [list(c) for c in best[1]]
    while True:
        small = [c for c in clusters if len(c) < min_size]
        if not small or len(clusters) == 1:
            break
        c = min(small, key=lambda c: (len(c), c[0]))
        others = [o for o in clusters if o is not c]
        target = min(others, key=lambda o: (_linkage(d, c, o), o[0]))
        target.extend(c)
        target.sort()
        clusters.remove(c)
    clusters.sort(key=lambda c: c[0])
    labels = [0] * p
    for lab, c in enumerate(clusters):
        for i in c:
            labels[i] = lab
    return Partition(labels, len(clusters), set(blacklist))


def cluster(data: Dataset, alpha: float, counter: CallCounter | None = None) -> tuple[Partition, Distances]:
    dist = distance_matrix(data, alpha, counter)
    return partition(dist.d, dist.blacklist), dist
