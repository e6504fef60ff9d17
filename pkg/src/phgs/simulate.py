"""Discrete Bayesian networks: representation, tiling, state merging and sampling."""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from math import prod
from pathlib import Path

import numpy as np

from .dataset import Dataset
from .graph import PDAG, GraphError, topological_order

MAX_ENUMERATION_CELLS = 2_000_000
MARGINAL_SAMPLES = 100_000


@dataclass
class BayesNet:
    """DAG plus one conditional probability table per node.

    ``cpts[i]`` has shape (q_i, r_i); rows are indexed by the configuration of
    the sorted parent list with the first parent most significant.
    """

    dag: PDAG
    cardinalities: tuple[int, ...]
    cpts: list[np.ndarray]
    names: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.dag.is_dag():
            raise GraphError("Bayes net structure must be a DAG")
        self.cardinalities = tuple(int(r) for r in self.cardinalities)
        if len(self.cardinalities) != self.dag.p or len(self.cpts) != self.dag.p:
            raise ValueError("cardinalities/cpts do not match node count")
        if not self.names:
            self.names = tuple(f"X{i}" for i in range(self.dag.p))
        self.names = tuple(self.names)
        cpts = []
        for i, t in enumerate(self.cpts):
            t = np.asarray(t, dtype=float)
            q = prod(self.cardinalities[k] for k in self.parents(i))
            if t.shape != (q, self.cardinalities[i]):
                raise ValueError(f"cpt {i} has shape {t.shape}, expected {(q, self.cardinalities[i])}")
            if np.any(t < 0) or np.any(np.abs(t.sum(axis=1) - 1.0) > 1e-9):
                raise ValueError(f"cpt {i} rows must be distributions")
            cpts.append(t / t.sum(axis=1, keepdims=True))
        self.cpts = cpts

    @property
    def p(self) -> int:
        return self.dag.p

    def parents(self, i: int) -> list[int]:
        return sorted(self.dag.parents(i))

    def n_params(self) -> int:
        return sum((r - 1) * t.shape[0] for r, t in zip(self.cardinalities, self.cpts))

    def permuted(self, perm) -> "BayesNet":
        """Relabel so that new node k is old node ``perm[k]``."""
        perm = list(perm)
        inv = np.argsort(perm)
        dag = PDAG.from_edges(self.p, [(int(inv[a]), int(inv[b])) for a, b in self.dag.directed_edges()])
        cpts = []
        for k, old in enumerate(perm):
            old_pa = self.parents(old)
            new_pa = sorted(dag.parents(k))
            # reorder parent axes from the old sorted order to the new sorted order
            t = self.cpts[old].reshape([self.cardinalities[x] for x in old_pa] + [self.cardinalities[old]])
            order = [old_pa.index(int(perm[x])) for x in new_pa]
            t = np.transpose(t, order + [len(old_pa)]) if old_pa else t
            cpts.append(t.reshape(-1, self.cardinalities[old]))
        return BayesNet(dag, tuple(self.cardinalities[o] for o in perm), cpts, tuple(self.names[o] for o in perm))

    def to_json(self) -> dict:
        return {
            "names": list(self.names),
            "cardinalities": list(self.cardinalities),
            "edges": [list(e) for e in self.dag.directed_edges()],
            "cpts": [t.tolist() for t in self.cpts],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "BayesNet":
        try:
            cards = obj["cardinalities"]
            dag = PDAG.from_edges(len(cards), [tuple(e) for e in obj["edges"]])
            return cls(dag, tuple(cards), [np.array(t, dtype=float) for t in obj["cpts"]], tuple(obj.get("names", ())))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed network: {exc}") from exc

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "BayesNet":
        try:
            obj = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ValueError(f"malformed network file {path}: {exc}") from exc
        return cls.from_json(obj)


def builtin(name: str) -> BayesNet:
    """Load a shipped network: ``asia``, ``cancer`` or ``random10``."""
    ref = resources.files("phgs").joinpath("nets", f"{name}.json")
    if not ref.is_file():
        raise KeyError(f"no built-in network {name!r}")
    return BayesNet.from_json(json.loads(ref.read_text(encoding="utf-8")))


def sample(bn: BayesNet, n: int, seed) -> Dataset:
    """Forward sampling in topological order."""
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    order = topological_order(bn.dag)
    values = np.zeros((n, bn.p), dtype=np.int64)
    for i in order:
        pidx = np.zeros(n, dtype=np.int64)
        for k in bn.parents(i):
            pidx = pidx * bn.cardinalities[k] + values[:, k]
        cum = np.cumsum(bn.cpts[i], axis=1)
        cum[:, -1] = 1.0
        u = rng.random(n)
        values[:, i] = (u[:, None] >= cum[pidx]).sum(axis=1)
    return Dataset(values, bn.cardinalities, bn.names)


def permute_columns(data: Dataset, bn: BayesNet, seed) -> tuple[Dataset, BayesNet, list[int]]:
    """Randomly reorder variables in both the data and the network."""
    perm = [int(x) for x in np.random.default_rng(seed).permutation(data.p)]
    return data.permute_columns(perm), bn.permuted(perm), perm


def _dirichlet_rows(rng, q: int, r: int, concentration: float = 1.0) -> np.ndarray:
    return rng.dirichlet(np.full(r, concentration), size=q)


def tile(base: BayesNet, copies: int, seed) -> BayesNet:
    """Disjoint copies of ``base`` joined by random interconnections.

    Each root node of every copy after the first draws a parent count from the
    base network's in-degree distribution (truncated at 4) and takes that many
    parents uniformly from earlier copies, with fresh Dirichlet(1) CPT rows.
    """
    if copies < 1:
        raise ValueError("copies must be >= 1")
    if copies == 1:
        return base
    rng = np.random.default_rng(seed)
    p0 = base.p
    indeg = np.array([len(base.parents(i)) for i in range(p0)])
    top = min(int(indeg.max()), 4)
    law = np.array([np.sum(indeg == a) for a in range(top + 1)], dtype=float)
    law /= law.sum()
    edges = []
    cards = list(base.cardinalities) * copies
    cpts = []
    names = []
    for c in range(copies):
        off = c * p0
        edges.extend((a + off, b + off) for a, b in base.dag.directed_edges())
        for i in range(p0):
            names.append(base.names[i] if c == 0 else f"{base.names[i]}_{c}")
            cpts.append(base.cpts[i].copy())
    for c in range(1, copies):
        off = c * p0
        for i in range(p0):
            if indeg[i] != 0:
                continue
            e = min(int(rng.choice(len(law), p=law)), off)
            if e == 0:
                continue
            pa = sorted(int(x) for x in rng.choice(off, size=e, replace=False))
            edges.extend((k, i + off) for k in pa)
            q = prod(cards[k] for k in pa)
            cpts[i + off] = _dirichlet_rows(rng, q, cards[i + off])
    dag = PDAG.from_edges(p0 * copies, edges)
    return BayesNet(dag, tuple(cards), cpts, tuple(names))


def marginals(bn: BayesNet, seed=0) -> list[np.ndarray]:
    """Exact single-variable marginals by enumeration when small, else sampled estimates."""
    if prod(bn.cardinalities) <= MAX_ENUMERATION_CELLS:
        grids = np.indices(bn.cardinalities).reshape(bn.p, -1).T
        logp = np.zeros(grids.shape[0])
        for i in range(bn.p):
            pidx = np.zeros(grids.shape[0], dtype=np.int64)
            for k in bn.parents(i):
                pidx = pidx * bn.cardinalities[k] + grids[:, k]
            logp += np.log(np.maximum(bn.cpts[i][pidx, grids[:, i]], 1e-300))
        w = np.exp(logp)
        return [np.bincount(grids[:, i], weights=w, minlength=r) / w.sum() for i, r in enumerate(bn.cardinalities)]
    data = sample(bn, MARGINAL_SAMPLES, seed)
    return [np.bincount(data.values[:, i], minlength=r) / data.n for i, r in enumerate(bn.cardinalities)]


def _merge_pair(bn: BayesNet, v: int, a: int, b: int, marg: np.ndarray) -> BayesNet:
    """Merge state ``b`` of node ``v`` into state ``a``."""
    cards = list(bn.cardinalities)
    cpts = [t.copy() for t in bn.cpts]
    t = cpts[v]
    t[:, a] += t[:, b]
    cpts[v] = np.delete(t, b, axis=1)
    wa, wb = marg[a], marg[b]
    if wa + wb <= 0:
        wa = wb = 1.0
    for child in sorted(bn.dag.children(v)):
        pa = bn.parents(child)
        shape = [cards[k] for k in pa] + [cards[child]]
        ax = pa.index(v)
        t = cpts[child].reshape(shape)
        ta = np.take(t, a, axis=ax)
        tb = np.take(t, b, axis=ax)
        avg = (wa * ta + wb * tb) / (wa + wb)
        t = t.copy()
        idx = [slice(None)] * len(shape)
        idx[ax] = a
        t[tuple(idx)] = avg
        t = np.delete(t, b, axis=ax)
        t = t / t.sum(axis=-1, keepdims=True)
        cpts[child] = t.reshape(-1, cards[child])
    cards[v] -= 1
    return BayesNet(bn.dag, tuple(cards), cpts, bn.names)


def merge_states(bn: BayesNet, max_levels: int = 8, seed=0) -> BayesNet:
    """Randomly merge state pairs until every variable has at most ``max_levels`` states.

    Child CPT rows for merged parent states are averaged with weights given by
    the merged states' marginal probabilities.
    """
    rng = np.random.default_rng(seed)
    for v in range(bn.p):
        if bn.cardinalities[v] <= max_levels:
            continue
        marg = marginals(bn, seed)[v]
        while bn.cardinalities[v] > max_levels:
            a, b = sorted(int(x) for x in rng.choice(bn.cardinalities[v], size=2, replace=False))
            bn = _merge_pair(bn, v, a, b, marg)
            marg = np.delete(np.concatenate([marg[:a], [marg[a] + marg[b]], marg[a + 1:]]), b)
    return bn


def random_bayes_net(
    p: int,
    edge_prob: float,
    seed,
    max_card: int = 3,
    concentration: float = 1.0,
    max_parents: int | None = None,
    min_effect: float = 0.0,
    max_tries: int = 1000,
) -> BayesNet:
    """Random DAG over a random causal order with Dirichlet CPT rows.

    With ``min_effect`` > 0 each CPT is redrawn until every parent moves the
    child's distribution by at least that much in total variation between
    some pair of rows that differ only in that parent.
    """
    rng = np.random.default_rng(seed)
    order = rng.permutation(p)
    edges = []
    for b in range(1, p):
        cand = [a for a in range(b) if rng.random() < edge_prob]
        if max_parents is not None and len(cand) > max_parents:
            cand = sorted(rng.choice(cand, size=max_parents, replace=False).tolist())
        edges.extend((int(order[a]), int(order[b])) for a in cand)
    dag = PDAG.from_edges(p, edges)
    cards = tuple(int(r) for r in rng.integers(2, max_card + 1, size=p))
    cpts = []
    for i in range(p):
        pa = sorted(dag.parents(i))
        q = prod(cards[k] for k in pa)
        for _ in range(max_tries):
            t = _dirichlet_rows(rng, q, cards[i], concentration)
            if min_effect <= 0 or _min_parent_effect(t, [cards[k] for k in pa], cards[i]) >= min_effect:
                break
        else:
            raise RuntimeError(f"could not draw a CPT with effect >= {min_effect} for node {i}")
        cpts.append(t)
    return BayesNet(dag, cards, cpts)


def _min_parent_effect(t: np.ndarray, pcards: list[int], r: int) -> float:
    """Smallest, over parents, of the largest total-variation change that parent can cause."""
    if not pcards:
        return np.inf
    t = t.reshape(pcards + [r])
    out = np.inf
    for ax in range(len(pcards)):
        moved = np.moveaxis(t, ax, 0)
        tv = 0.0
        for a in range(pcards[ax]):
            for b in range(a + 1, pcards[ax]):
                tv = max(tv, float(0.5 * np.abs(moved[a] - moved[b]).sum(axis=-1).max()))
        out = min(out, tv)
    return out
