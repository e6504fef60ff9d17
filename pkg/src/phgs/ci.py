"""Conditional-independence sources: G-squared on data, or a d-separation oracle."""

from __future__ import annotations

from typing import Iterable

from .dataset import CellBudgetExceeded, Dataset
from .graph import PDAG, d_separated
from .stats import CallCounter, g_squared


class DataCi:
    """Declares independence when the G-squared p-value exceeds ``alpha``."""

    def __init__(self, data: Dataset, alpha: float, counter: CallCounter | None = None):
        self.data = data
        self.alpha = alpha
        self.counter = counter if counter is not None else CallCounter()

    @property
    def p(self) -> int:
        return self.data.p

    def p_value(self, i: int, j: int, cond: Iterable[int]) -> float:
        """p-value of the test; oversized tables count as dependence (0.0)."""
        try:
            return g_squared(self.data, i, j, tuple(cond), self.counter).p_value
        except CellBudgetExceeded:
            return 0.0

    def independent(self, i: int, j: int, cond: Iterable[int]) -> bool:
        return self.p_value(i, j, cond) > self.alpha


class OracleCi:
    """d-separation in a known DAG; p-values are 1.0 (separated) or 0.0."""

    alpha = 0.5

    def __init__(self, dag: PDAG, counter: CallCounter | None = None):
        if not dag.is_dag():
            raise ValueError("oracle needs a DAG")
        self.dag = dag
        self.counter = counter if counter is not None else CallCounter()

    @property
    def p(self) -> int:
        return self.dag.p

    def p_value(self, i: int, j: int, cond: Iterable[int]) -> float:
        self.counter.add(ci_tests=1)
        return 1.0 if d_separated(self.dag, i, j, cond) else 0.0

    def independent(self, i: int, j: int, cond: Iterable[int]) -> bool:
        return self.p_value(i, j, cond) > self.alpha
