"""Empirical information measures, the G-squared test and the BIC family score."""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from math import log, prod
from typing import Iterable

import numpy as np
from scipy.special import gammaincc

from .dataset import CellBudgetExceeded, Dataset


@dataclass
class CallCounter:
    """Counts statistical calls; increments are lock-protected."""

    ci_tests: int = 0
    score_calls: int = 0
    mi_entropy_calls: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def add(self, ci_tests: int = 0, score_calls: int = 0, mi_entropy_calls: int = 0) -> None:
        with self._lock:
            self.ci_tests += ci_tests
            self.score_calls += score_calls
            self.mi_entropy_calls += mi_entropy_calls

    @property
    def total(self) -> int:
        return self.ci_tests + self.score_calls + self.mi_entropy_calls

    def as_dict(self) -> dict:
        return {
            "ci_tests": self.ci_tests,
            "score_calls": self.score_calls,
            "mi_entropy_calls": self.mi_entropy_calls,
            "total": self.total,
        }

    def snapshot(self) -> "CallCounter":
        return CallCounter(self.ci_tests, self.score_calls, self.mi_entropy_calls)


@dataclass(frozen=True)
class CiTestResult:
    statistic: float
    df: int
    p_value: float


def chi2_sf(statistic: float, df: int) -> float:
    """Upper-tail chi-square probability via the regularized upper incomplete gamma."""
    if statistic <= 0.0:
        return 1.0
    return float(gammaincc(df / 2.0, statistic / 2.0))


def _xlogx_ratio(counts: np.ndarray) -> float:
    nz = counts[counts > 0].astype(float)
    return float(np.sum(nz * np.log(nz)))


def entropy(data: Dataset, i: int, counter: CallCounter | None = None) -> float:
    """Plug-in entropy of one column in nats."""
    if not 0 <= i < data.p:
        raise IndexError(i)
    if counter is not None:
        counter.add(mi_entropy_calls=1)
    c = np.bincount(data.values[:, i], minlength=data.cardinalities[i])
    n = data.n
    return log(n) - _xlogx_ratio(c) / n


def joint_entropy(data: Dataset, vars: Iterable[int]) -> float:
    idx, size = data.config_index(list(vars))
    c = np.bincount(idx, minlength=size)
    return log(data.n) - _xlogx_ratio(c) / data.n


def mutual_information(data: Dataset, i: int, j: int, counter: CallCounter | None = None) -> float:
    if i == j:
        raise ValueError("mutual_information needs distinct variables; use entropy for I(X, X)")
    if counter is not None:
        counter.add(mi_entropy_calls=1)
    ri, rj = data.cardinalities[i], data.cardinalities[j]
    idx = data.values[:, i] * rj + data.values[:, j]
    nij = np.bincount(idx, minlength=ri * rj).reshape(ri, rj).astype(float)
    return _mi_from_table(nij, data.n)


def _mi_from_table(nij: np.ndarray, n: int) -> float:
    ni = nij.sum(axis=1, keepdims=True)
    nj = nij.sum(axis=0, keepdims=True)
    mask = nij > 0
    expected = (ni * nj)[mask]
    obs = nij[mask]
    return float(np.sum(obs * (np.log(obs) + log(n) - np.log(expected)))) / n


def g_squared(
    data: Dataset,
    i: int,
    j: int,
    cond: Iterable[int] = (),
    counter: CallCounter | None = None,
) -> CiTestResult:
    """Likelihood-ratio test of X_i independent of X_j given X_cond.

    Degrees of freedom are (r_i - 1)(r_j - 1) times the product of conditioning
    cardinalities, without reduction for empty strata. Raises
    :class:`CellBudgetExceeded` for oversized tables.
    """
    cond = tuple(cond)
    if i == j or i in cond or j in cond or len(set(cond)) != len(cond):
        raise ValueError(f"test variables overlap: {i}, {j} | {cond}")
    data.check_budget((i, j) + cond)
    if counter is not None:
        counter.add(ci_tests=1)
    ri, rj = data.cardinalities[i], data.cardinalities[j]
    kidx, q = data.config_index(cond)
    idx = (kidx * ri + data.values[:, i]) * rj + data.values[:, j]
    nijk = np.bincount(idx, minlength=q * ri * rj).reshape(q, ri, rj).astype(float)
    nik = nijk.sum(axis=2, keepdims=True)
    njk = nijk.sum(axis=1, keepdims=True)
    nk = nik.sum(axis=1, keepdims=True)
    mask = nijk > 0
    obs = nijk[mask]
    num = np.broadcast_to(nk, nijk.shape)[mask]
    den = (nik * njk)[mask]
    stat = 2.0 * float(np.sum(obs * (np.log(obs) + np.log(num) - np.log(den))))
    stat = max(stat, 0.0)
    df = (ri - 1) * (rj - 1) * q
    return CiTestResult(stat, df, chi2_sf(stat, df))


def bic_lambda(n: int) -> float:
    return 0.5 * log(n)


class ScoreCache:
    """Memo of family scores keyed by (child, sorted parent tuple).

    Inserts are idempotent: concurrent writers store identical values.
    """

    def __init__(self):
        self.entries: dict[tuple[int, tuple[int, ...]], float] = {}
        self.hits = 0
        self.misses = 0
        self._lock = threading.Lock()

    def get(self, key):
        with self._lock:
            val = self.entries.get(key)
            if val is None:
                self.misses += 1
            else:
                self.hits += 1
            return val

    def put(self, key, value: float) -> None:
        with self._lock:
            self.entries.setdefault(key, value)

    def __len__(self) -> int:
        return len(self.entries)


def _family_loglik(data: Dataset, i: int, parents: tuple[int, ...]) -> float:
    ri = data.cardinalities[i]
    pidx, q = data.config_index(parents)
    idx = pidx * ri + data.values[:, i]
    nxp = np.bincount(idx, minlength=q * ri).reshape(q, ri).astype(float)
    npa = nxp.sum(axis=1, keepdims=True)
    mask = nxp > 0
    obs = nxp[mask]
    return float(np.sum(obs * (np.log(obs) - np.log(np.broadcast_to(npa, nxp.shape)[mask]))))


def family_score(
    data: Dataset,
    i: int,
    parents: Iterable[int],
    lam: float | None = None,
    cache: ScoreCache | None = None,
    counter: CallCounter | None = None,
) -> float:
    """Penalized multinomial log-likelihood of node ``i`` given ``parents``.

    ``lam`` defaults to the BIC penalty. Oversized families score ``-inf``.
    The counter is charged only when the value is actually computed.
    """
    parents = tuple(sorted(set(parents)))
    if i in parents:
        raise ValueError(f"node {i} cannot be its own parent")
    if lam is None:
        lam = bic_lambda(data.n)
    key = (i, parents)
    if cache is not None:
        hit = cache.get(key)
        if hit is not None:
            return hit
    try:
        data.check_budget((i,) + parents)
    except CellBudgetExceeded:
        value = float("-inf")
    else:
        if counter is not None:
            counter.add(score_calls=1)
        q = prod(data.cardinalities[k] for k in parents)
        value = _family_loglik(data, i, parents) - lam * (data.cardinalities[i] - 1) * q
    if cache is not None:
        cache.put(key, value)
    return value


def graph_score(data: Dataset, dag, lam: float | None = None, cache=None, counter=None) -> float:
    """Sum of family scores of a fully directed acyclic graph."""
    if not dag.is_dag():
        raise ValueError("graph_score needs a DAG")
    return sum(
        family_score(data, i, dag.parents(i), lam, cache, counter) for i in range(dag.p)
    )
