import itertools
import sys

import numpy as np
import pytest

from phgs.dataset import from_array
from phgs.graph import PDAG


def all_dags(p):
    """Every labelled DAG on ``p`` nodes (brute force, p <= 4)."""
    pairs = list(itertools.combinations(range(p), 2))
    out = []
    for states in itertools.product((0, 1, 2), repeat=len(pairs)):
        edges = []
        for (i, j), s in zip(pairs, states):
            if s == 1:
                edges.append((i, j))
            elif s == 2:
                edges.append((j, i))
        g = PDAG.from_edges(p, edges)
        if g.is_dag():
            out.append(g)
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_data():
    rng = np.random.default_rng(7)
    n = 400
    a = rng.integers(0, 2, n)
    b = (a + (rng.random(n) < 0.2)) % 2
    c = rng.integers(0, 3, n)
    d = (b + c + (rng.random(n) < 0.3)) % 3
    e = rng.integers(0, 2, n)
    return from_array(np.column_stack([a, b, c, d, e]))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(results):
        parts = results[crit]
        ok = all(p[1] for p in parts)
        detail = "; ".join(f"{name}: {'ok' if good else 'FAIL'} ({info})" for name, good, info in parts)
        terminalreporter.write_line(f"criterion {crit:2d} {'PASS' if ok else 'FAIL'}  {detail}")
