"""Partially directed graphs, orientation rules and equivalence-class utilities.

A single :class:`PDAG` type serves as skeleton, pattern, CPDAG and DAG. Each
connected pair carries exactly one edge, either undirected or directed.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

UNDIRECTED = "--"
DIRECTED = "->"


class GraphError(ValueError):
    pass


class PDAG:
    def __init__(self, p: int):
        self.p = int(p)
        self._und: list[set[int]] = [set() for _ in range(self.p)]
        self._ch: list[set[int]] = [set() for _ in range(self.p)]
        self._pa: list[set[int]] = [set() for _ in range(self.p)]

    # construction -------------------------------------------------------

    @classmethod
    def complete(cls, p: int) -> "PDAG":
        g = cls(p)
        for i, j in itertools.combinations(range(p), 2):
            g.add_undirected(i, j)
        return g

    @classmethod
    def from_edges(cls, p: int, directed: Iterable = (), undirected: Iterable = ()) -> "PDAG":
        g = cls(p)
        for i, j in directed:
            g.add_directed(i, j)
        for i, j in undirected:
            g.add_undirected(i, j)
        return g

    def copy(self) -> "PDAG":
        g = PDAG(self.p)
        g._und = [set(s) for s in self._und]
        g._ch = [set(s) for s in self._ch]
        g._pa = [set(s) for s in self._pa]
        return g

    # queries ------------------------------------------------------------

    def adjacent(self, i: int, j: int) -> bool:
        return j in self._und[i] or j in self._ch[i] or j in self._pa[i]

    def has_directed(self, i: int, j: int) -> bool:
        return j in self._ch[i]

    def has_undirected(self, i: int, j: int) -> bool:
        return j in self._und[i]

    def neighbors(self, i: int) -> set[int]:
        """All nodes adjacent to ``i`` regardless of edge kind."""
        return self._und[i] | self._ch[i] | self._pa[i]

    def undirected_neighbors(self, i: int) -> set[int]:
        return set(self._und[i])

    def parents(self, i: int) -> set[int]:
        return set(self._pa[i])

    def children(self, i: int) -> set[int]:
        return set(self._ch[i])

    def degree(self, i: int) -> int:
        return len(self._und[i]) + len(self._ch[i]) + len(self._pa[i])

    def edges(self) -> list[tuple[int, int, str]]:
        """Sorted edge list; undirected edges are reported with i < j."""
        out = []
        for i in range(self.p):
            for j in self._und[i]:
                if i < j:
                    out.append((i, j, UNDIRECTED))
            for j in self._ch[i]:
                out.append((i, j, DIRECTED))
        out.sort(key=lambda e: (min(e[0], e[1]), max(e[0], e[1]), e[0]))
        return out

    def directed_edges(self) -> list[tuple[int, int]]:
        return sorted((i, j) for i in range(self.p) for j in self._ch[i])

    def undirected_edges(self) -> list[tuple[int, int]]:
        return sorted((i, j) for i in range(self.p) for j in self._und[i] if i < j)

    def adjacent_pairs(self) -> list[tuple[int, int]]:
        return sorted(
            (i, j) for i in range(self.p) for j in self.neighbors(i) if i < j
        )

    @property
    def n_edges(self) -> int:
        return sum(len(s) for s in self._und) // 2 + sum(len(s) for s in self._ch)

    def is_directed(self) -> bool:
        return all(not s for s in self._und)

    def is_undirected(self) -> bool:
        return all(not s for s in self._ch)

    def reaches(self, a: int, b: int) -> bool:
        """Whether a directed path a -> ... -> b exists (a reaches itself)."""
        if a == b:
            return True
        seen = {a}
        stack = [a]
        while stack:
            u = stack.pop()
            for v in self._ch[u]:
                if v == b:
                    return True
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return False

    def has_directed_cycle(self) -> bool:
        return topological_order(self) is None

    def is_dag(self) -> bool:
        return self.is_directed() and not self.has_directed_cycle()

    def skeleton(self) -> "PDAG":
        g = PDAG(self.p)
        for i, j in self.adjacent_pairs():
            g.add_undirected(i, j)
        return g

    def signature(self) -> tuple:
        return tuple(self.edges())

    def __eq__(self, other) -> bool:
        return isinstance(other, PDAG) and self.p == other.p and self.signature() == other.signature()

    def __hash__(self) -> int:
        return hash((self.p, self.signature()))

    def __repr__(self) -> str:
        body = ", ".join(f"{i}{k}{j}" for i, j, k in self.edges())
        return f"PDAG(p={self.p}, [{body}])"

    # mutation -----------------------------------------------------------

    def _check_pair(self, i: int, j: int) -> None:
        if i == j:
            raise GraphError(f"self-loop on {i}")
        if not (0 <= i < self.p and 0 <= j < self.p):
            raise GraphError(f"node out of range: {i}, {j}")

    def add_undirected(self, i: int, j: int) -> None:
        self._check_pair(i, j)
        if self.has_directed(i, j) or self.has_directed(j, i):
            raise GraphError(f"pair {i},{j} already holds a directed edge")
        self._und[i].add(j)
        self._und[j].add(i)

    def add_directed(self, i: int, j: int) -> None:
        self._check_pair(i, j)
        if self.has_undirected(i, j) or self.has_directed(j, i):
            raise GraphError(f"pair {i},{j} already connected")
        self._ch[i].add(j)
        self._pa[j].add(i)

    def orient(self, i: int, j: int) -> None:
        """Turn the undirected edge i -- j into i -> j."""
        if not self.has_undirected(i, j):
            raise GraphError(f"no undirected edge {i} -- {j}")
        self._und[i].discard(j)
        self._und[j].discard(i)
        self._ch[i].add(j)
        self._pa[j].add(i)

    def remove_edge(self, i: int, j: int) -> None:
        self._und[i].discard(j)
        self._und[j].discard(i)
        self._ch[i].discard(j)
        self._pa[j].discard(i)
        self._ch[j].discard(i)
        self._pa[i].discard(j)

    def remove_node_edges(self, i: int) -> None:
        for j in list(self.neighbors(i)):
            self.remove_edge(i, j)

    # serialization ------------------------------------------------------

    def to_edgelist(self) -> str:
        lines = [f"nodes {self.p}"]
        lines += [f"{i} {k} {j}" for i, j, k in self.edges()]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_edgelist(cls, text: str) -> "PDAG":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("nodes "):
            raise GraphError("edge list must start with 'nodes <p>'")
        g = cls(int(lines[0].split()[1]))
        for ln in lines[1:]:
            parts = ln.split()
            if len(parts) != 3 or parts[1] not in (DIRECTED, UNDIRECTED):
                raise GraphError(f"bad edge line: {ln!r}")
            i, j = int(parts[0]), int(parts[2])
            if parts[1] == DIRECTED:
                g.add_directed(i, j)
            else:
                g.add_undirected(i, j)
        return g

    def to_matrix(self) -> np.ndarray:
        """Adjacency matrix with a[i, j] = 1 when i -> j or i -- j."""
        a = np.zeros((self.p, self.p), dtype=np.int8)
        for i in range(self.p):
            for j in self._ch[i] | self._und[i]:
                a[i, j] = 1
        return a

    def permuted(self, perm: Sequence[int]) -> "PDAG":
        """Relabel node ``k`` as ``perm[k]``."""
        g = PDAG(self.p)
        for i, j, k in self.edges():
            if k == DIRECTED:
                g.add_directed(perm[i], perm[j])
            else:
                g.add_undirected(perm[i], perm[j])
        return g


def topological_order(g: PDAG) -> list[int] | None:
    """Kahn ordering of the directed part, smallest index first; ``None`` on a cycle."""
    import heapq

    indeg = [len(g._pa[i]) for i in range(g.p)]
    heap = [i for i in range(g.p) if indeg[i] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        u = heapq.heappop(heap)
        order.append(u)
        for v in g._ch[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                heapq.heappush(heap, v)
    return order if len(order) == g.p else None


# ---------------------------------------------------------------------------
# separation records and v-structures


@dataclass
class SeparationRecord:
    """Maximum p-value per pair over every conditioning set tested, with its argmax set."""

    p: int
    phi: np.ndarray = field(default=None)
    sepsets: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.phi is None:
            self.phi = np.full((self.p, self.p), np.nan)

    def update(self, i: int, j: int, cond: Iterable[int], p_value: float) -> None:
        key = (min(i, j), max(i, j))
        cur = self.phi[i, j]
        if key not in self.sepsets or p_value > cur:
            self.phi[i, j] = self.phi[j, i] = p_value
            self.sepsets[key] = frozenset(cond)

    def tested(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self.sepsets

    def sepset(self, i: int, j: int) -> frozenset | None:
        return self.sepsets.get((min(i, j), max(i, j)))

    def copy(self) -> "SeparationRecord":
        return SeparationRecord(self.p, self.phi.copy(), dict(self.sepsets))

    def to_json(self) -> dict:
        phi = [[None if np.isnan(v) else float(v) for v in row] for row in self.phi]
        return {
            "p": self.p,
            "phi": phi,
            "sepsets": {f"{i},{j}": sorted(s) for (i, j), s in sorted(self.sepsets.items())},
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SeparationRecord":
        phi = np.array([[np.nan if v is None else v for v in row] for row in obj["phi"]], dtype=float)
        seps = {}
        for key, val in obj["sepsets"].items():
            i, j = (int(t) for t in key.split(","))
            seps[(i, j)] = frozenset(val)
        return cls(int(obj["p"]), phi, seps)


VStructure = tuple  # (i, k, j): i -> k <- j with i < j nonadjacent


def unshielded_triples(g: PDAG) -> Iterator[tuple[int, int, int]]:
    """Triples (i, k, j) with i < j both adjacent to k and i, j nonadjacent, in sorted order."""
    for k in range(g.p):
        nb = sorted(g.neighbors(k))
        for a, b in itertools.combinations(nb, 2):
            if not g.adjacent(a, b):
                yield (a, k, b)


def vstructures(g: PDAG) -> list[VStructure]:
    """Colliders i -> k <- j with i, j nonadjacent, sorted by (i, k, j)."""
    out = []
    for k in range(g.p):
        pa = sorted(g._pa[k])
        for a, b in itertools.combinations(pa, 2):
            if not g.adjacent(a, b):
                out.append((a, k, b))
    return sorted(out)


def detect_vstructures_from_sepsets(
    skeleton: PDAG, rec: SeparationRecord, threshold: float
) -> list[VStructure]:
    """Unshielded triples whose middle node is absent from the pair's separating set.

    A nonadjacent pair counts as separated when its maximum p-value exceeds
    ``threshold``; pairs that are not separated do not yield v-structures.
    """
    out = []
    for i, k, j in sorted(unshielded_triples(skeleton)):
        phi = rec.phi[i, j]
        if not (phi > threshold):
            continue
        s = rec.sepset(i, j)
        if s is None:
            raise GraphError(f"separated pair ({i}, {j}) has no separating set")
        if k not in s:
            out.append((i, k, j))
    return out


def detect_vstructures_by_testing(skeleton: PDAG, ci, m: int | None = None) -> list[VStructure]:
    """Collider detection by testing subsets of the smaller neighborhood that contain the middle node.

    ``ci`` must provide ``independent(i, j, cond) -> bool``; it is responsible for
    its own call accounting.
    """
    out = []
    for i, k, j in sorted(unshielded_triples(skeleton)):
        ni, nj = skeleton.neighbors(i), skeleton.neighbors(j)
        q = i if len(ni) <= len(nj) else j
        others = sorted((ni if q == i else nj) - {k, i, j})
        cap = len(others) + 1 if m is None else m
        collider = True
        for size in range(0, min(len(others), cap - 1) + 1):
            for rest in itertools.combinations(others, size):
                if ci.independent(i, j, tuple(sorted((k,) + rest))):
                    collider = False
                    break
            if not collider:
                break
        if collider:
            out.append((i, k, j))
    return out


# ---------------------------------------------------------------------------
# orientation rules


_RULE_ORDER = ("R1", "R2", "R3", "R4")


def _rule_fires(g: PDAG, rule: str, x: int, y: int) -> bool:
    """Whether ``rule`` compels x -> y for the undirected edge x -- y.

    R1: a -> x -- y, a and y nonadjacent.  R2: x -> c -> y.
    R3: x -- c -> y and x -- d -> y, c and d nonadjacent.
    R4: x -- d -> c -> y, d and y nonadjacent.
    """
    if rule == "R1":
        return any(not g.adjacent(a, y) for a in g._pa[x])
    if rule == "R2":
        return bool(g._ch[x] & g._pa[y])
    if rule == "R3":
        cands = sorted(g._und[x] & g._pa[y])
        return any(not g.adjacent(c, d) for c, d in itertools.combinations(cands, 2))
    return any(
        d != y and not g.adjacent(d, y) and (g._ch[d] & g._pa[y]) for d in g._und[x]
    )


def meek_closure(g: PDAG) -> PDAG:
    """Apply R1-R4 until no rule fires; returns a new graph.

    Rules are scanned R1 to R4 over undirected edges in ascending order and the
    scan restarts after every orientation.
    """
    g = g.copy()
    changed = True
    while changed:
        changed = False
        for rule in _RULE_ORDER:
            for a, b in g.undirected_edges():
                for x, y in ((a, b), (b, a)):
                    if _rule_fires(g, rule, x, y):
                        g.orient(x, y)
                        changed = True
                        break
                if changed:
                    break
            if changed:
                break
    return g


def meek_compelled(g: PDAG) -> list[tuple[int, int]]:
    """Single-step orientations x -> y compelled by R1-R4 on the current graph."""
    out = []
    for a, b in g.undirected_edges():
        for x, y in ((a, b), (b, a)):
            if any(_rule_fires(g, rule, x, y) for rule in _RULE_ORDER):
                out.append((x, y))
    return out


def orient_vstructures(skeleton: PDAG, vstructs: Iterable[VStructure]) -> PDAG:
    """Orient colliders in order; a v-structure needing a reversal is skipped whole."""
    g = skeleton.copy()
    for i, k, j in vstructs:
        if g.has_directed(k, i) or g.has_directed(k, j):
            continue
        if not (g.adjacent(i, k) and g.adjacent(j, k)):
            continue
        for a in (i, j):
            if g.has_undirected(a, k):
                g.orient(a, k)
    return g


def skel_to_cpdag(skeleton: PDAG, vstructs: Iterable[VStructure]) -> PDAG:
    return meek_closure(orient_vstructures(skeleton, vstructs))


def pattern(dag: PDAG) -> PDAG:
    return orient_vstructures(dag.skeleton(), vstructures(dag))


def cpdag_of_dag(dag: PDAG) -> PDAG:
    if not dag.is_dag():
        raise GraphError("cpdag_of_dag needs a DAG")
    return meek_closure(pattern(dag))


def _is_candidate_sink(g0: PDAG, j: int) -> bool:
    if g0._ch[j]:
        return False
    nb = g0.neighbors(j)
    for k in g0._und[j]:
        for other in nb:
            if other != k and not g0.adjacent(k, other):
                return False
    return True


def _extend_partial(g: PDAG) -> tuple[PDAG, PDAG]:
    """Run sink elimination as far as possible; returns (oriented graph, leftover)."""
    out = g.copy()
    g0 = g.copy()
    alive = set(range(g.p))
    progress = True
    while progress:
        progress = False
        for j in sorted(alive):
            if _is_candidate_sink(g0, j):
                for k in sorted(g0._und[j]):
                    out.orient(k, j)
                g0.remove_node_edges(j)
                alive.discard(j)
                progress = True
                break
    return out, g0


def pdag_to_dag(g: PDAG) -> PDAG | None:
    """Consistent DAG extension of a PDAG, or ``None`` if none exists.

    Candidate sinks are taken in ascending index order.
    """
    out, leftover = _extend_partial(g)
    if any(leftover._und):
        return None
    if out.has_directed_cycle():
        return None
    return out


def semi_arbitrary_extension(g: PDAG, rng: np.random.Generator) -> PDAG:
    """DAG for scoring an invalid PDAG.

    Sink elimination is applied first; remaining undirected edges are then
    directed in shuffled order at random, falling back to the other direction,
    and directed edges that would close a cycle are dropped.
    """
    partial, _ = _extend_partial(g)
    dag = PDAG(g.p)
    for i, j in partial.directed_edges():
        if not dag.reaches(j, i):
            dag.add_directed(i, j)
    und = partial.undirected_edges()
    order = rng.permutation(len(und))
    for idx in order:
        a, b = und[idx]
        if rng.random() < 0.5:
            a, b = b, a
        if not dag.reaches(b, a):
            dag.add_directed(a, b)
        elif not dag.reaches(a, b):
            dag.add_directed(b, a)
    return dag


# ---------------------------------------------------------------------------
# d-separation and equivalence classes


def d_separated(dag: PDAG, i: int, j: int, cond: Iterable[int] = ()) -> bool:
    """Reachability check for an active trail between ``i`` and ``j`` given ``cond``."""
    cond = set(cond)
    if i in cond or j in cond or i == j:
        raise GraphError("query nodes must be distinct and outside the conditioning set")
    # ancestors of the conditioning set (inclusive)
    anc = set()
    stack = list(cond)
    while stack:
        u = stack.pop()
        if u in anc:
            continue
        anc.add(u)
        stack.extend(dag._pa[u])
    # traverse (node, arrived_from_child) states
    visited = set()
    queue = deque([(i, True)])
    while queue:
        u, up = queue.popleft()
        if (u, up) in visited:
            continue
        visited.add((u, up))
        if u == j:
            return False
        if up and u not in cond:
            for v in dag._pa[u]:
                queue.append((v, True))
            for v in dag._ch[u]:
                queue.append((v, False))
        elif not up:
            if u not in cond:
                for v in dag._ch[u]:
                    queue.append((v, False))
            if u in anc:
                for v in dag._pa[u]:
                    queue.append((v, True))
    return True


MAX_ENUMERATION_NODES = 6


def enumerate_equivalence_class(dag: PDAG) -> list[PDAG]:
    """Every DAG sharing skeleton and v-structures with ``dag`` (brute force)."""
    if dag.p > MAX_ENUMERATION_NODES:
        raise GraphError(f"enumeration limited to {MAX_ENUMERATION_NODES} nodes")
    target = vstructures(dag)
    pairs = dag.adjacent_pairs()
    out = []
    for bits in itertools.product((0, 1), repeat=len(pairs)):
        g = PDAG(dag.p)
        for (a, b), flip in zip(pairs, bits):
            if flip:
                g.add_directed(b, a)
            else:
                g.add_directed(a, b)
        if not g.has_directed_cycle() and vstructures(g) == target:
            out.append(g)
    return out


def random_dag(p: int, edge_prob: float, rng: np.random.Generator) -> PDAG:
    """Erdos-Renyi DAG over a random topological order."""
    order = rng.permutation(p)
    g = PDAG(p)
    for a in range(p):
        for b in range(a + 1, p):
            if rng.random() < edge_prob:
                g.add_directed(int(order[a]), int(order[b]))
    return g
