"""Structural accuracy of an estimate against a true DAG, compared as CPDAGs."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .graph import PDAG, cpdag_of_dag
from .stats import CallCounter

TSV_FIELDS = ("p_est", "p_true", "tp", "reversed", "fp", "ji", "shd", "ci_tests", "score_calls", "mi_entropy_calls")


def _status(g: PDAG, i: int, j: int) -> str:
    if g.has_undirected(i, j):
        return "--"
    if g.has_directed(i, j):
        return "->"
    if g.has_directed(j, i):
        return "<-"
    return ""


@dataclass
class EvalReport:
    tp: int
    p_est: int
    p_true: int
    reversed: int
    fp: int
    ji: float
    shd: int
    calls: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "tp": self.tp,
            "p_est": self.p_est,
            "p_true": self.p_true,
            "reversed": self.reversed,
            "fp": self.fp,
            "ji": self.ji,
            "shd": self.shd,
            "calls": dict(self.calls),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1, sort_keys=True) + "\n"

    def tsv_header(self) -> str:
        return "\t".join(TSV_FIELDS) + "\n"

    def tsv_row(self) -> str:
        vals = {**self.to_json(), **{k: self.calls.get(k, 0) for k in TSV_FIELDS[7:]}}
        out = []
        for k in TSV_FIELDS:
            v = vals[k]
            out.append(f"{v:.6f}" if isinstance(v, float) else str(v))
        return "\t".join(out) + "\n"


def normalize(est: PDAG) -> PDAG:
    """CPDAG of a DAG estimate; anything else is compared as given."""
    return cpdag_of_dag(est) if est.is_dag() else est


def compare(est: PDAG, truth: PDAG, calls: CallCounter | None = None) -> EvalReport:
    if est.p != truth.p:
        raise ValueError(f"node count mismatch: {est.p} vs {truth.p}")
    a = normalize(est)
    b = cpdag_of_dag(truth)
    tp = rev = fp = shd = 0
    for i in range(a.p):
        for j in range(i + 1, a.p):
            sa, sb = _status(a, i, j), _status(b, i, j)
            if sa != sb:
                shd += 1
            if not sa:
                continue
            if sa == sb:
                tp += 1
            elif sb:
                rev += 1
            else:
                fp += 1
    pe, pt = a.n_edges, b.n_edges
    denom = pe + pt - tp
    ji = tp / denom if denom else 1.0
    return EvalReport(tp, pe, pt, rev, fp, ji, shd, calls.as_dict() if calls is not None else {})
