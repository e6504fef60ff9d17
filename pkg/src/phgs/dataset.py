"""Discrete datasets and contingency counting."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from math import prod
from pathlib import Path
from typing import Sequence

import numpy as np

DEFAULT_CELL_BUDGET = 10**7


class DataError(ValueError):
    """Raised for malformed or degenerate input data."""


class CellBudgetExceeded(RuntimeError):
    """A contingency table would exceed the configured cell budget."""


@dataclass(frozen=True)
class ContingencyTable:
    variables: tuple[int, ...]
    dims: tuple[int, ...]
    cells: np.ndarray

    @property
    def total(self) -> int:
        return int(self.cells.sum())

    def marginalize(self, keep: Sequence[int]) -> "ContingencyTable":
        """Sum out every variable not listed in ``keep`` (order of ``keep`` is preserved)."""
        keep = tuple(keep)
        axes = tuple(a for a, v in enumerate(self.variables) if v not in keep)
        summed = self.cells.sum(axis=axes) if axes else self.cells
        remaining = [v for v in self.variables if v in keep]
        order = [remaining.index(v) for v in keep]
        cells = np.transpose(summed, order) if order else summed
        dims = tuple(self.dims[self.variables.index(v)] for v in keep)
        return ContingencyTable(keep, dims, np.asarray(cells))


@dataclass(frozen=True)
class Dataset:
    """Immutable matrix of level indices, one column per variable.

    ``values`` has shape (n, p) and is stored column-major so that column
    access during counting is contiguous.
    """

    values: np.ndarray
    cardinalities: tuple[int, ...]
    names: tuple[str, ...] = field(default=())
    cell_budget: int = DEFAULT_CELL_BUDGET

    def __post_init__(self):
        values = np.asfortranarray(np.asarray(self.values, dtype=np.int64))
        if values.ndim != 2:
            raise DataError("values must be a 2-d array")
        n, p = values.shape
        if n < 1 or p < 1:
            raise DataError("dataset needs at least one row and one column")
        cards = tuple(int(r) for r in self.cardinalities)
        if len(cards) != p:
            raise DataError(f"expected {p} cardinalities, got {len(cards)}")
        for i, r in enumerate(cards):
            if r < 2:
                raise DataError(f"degenerate variable {i}: cardinality {r} < 2")
        if values.min() < 0 or np.any(values.max(axis=0) >= np.array(cards)):
            raise DataError("level index outside declared cardinality")
        names = tuple(self.names) if self.names else tuple(f"X{i}" for i in range(p))
        if len(names) != p:
            raise DataError("names length does not match column count")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "cardinalities", cards)
        object.__setattr__(self, "names", names)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def column(self, i: int) -> np.ndarray:
        return self.values[:, i]

    def permute_columns(self, perm: Sequence[int]) -> "Dataset":
        """Return a dataset whose column ``k`` is this dataset's column ``perm[k]``."""
        perm = list(perm)
        return Dataset(
            self.values[:, perm],
            tuple(self.cardinalities[k] for k in perm),
            tuple(self.names[k] for k in perm),
            self.cell_budget,
        )

    def config_index(self, vars: Sequence[int]) -> tuple[np.ndarray, int]:
        """Mixed-radix configuration index per row (first variable most significant)."""
        size = 1
        idx = np.zeros(self.n, dtype=np.int64)
        for v in vars:
            r = self.cardinalities[v]
            idx *= r
            idx += self.values[:, v]
            size *= r
        return idx, size

    def check_budget(self, vars: Sequence[int]) -> None:
        cells = prod(self.cardinalities[v] for v in vars)
        if cells > self.cell_budget:
            raise CellBudgetExceeded(f"{cells} cells exceeds budget {self.cell_budget}")


def count(data: Dataset, vars: Sequence[int]) -> ContingencyTable:
    """Dense joint count table over ``vars``; the empty list counts all rows."""
    vars = tuple(int(v) for v in vars)
    if len(set(vars)) != len(vars):
        raise ValueError(f"duplicate variable in {vars}")
    for v in vars:
        if not 0 <= v < data.p:
            raise IndexError(f"variable {v} out of range for p={data.p}")
    data.check_budget(vars)
    dims = tuple(data.cardinalities[v] for v in vars)
    if not vars:
        return ContingencyTable((), (), np.array(data.n, dtype=np.int64))
    idx, size = data.config_index(vars)
    cells = np.bincount(idx, minlength=size).reshape(dims)
    return ContingencyTable(vars, dims, cells)


def from_array(values, cardinalities=None, names=None) -> Dataset:
    """Build a dataset from an integer array; cardinalities default to max level + 1."""
    values = np.asarray(values, dtype=np.int64)
    if cardinalities is None:
        cardinalities = tuple(int(c) + 1 for c in values.max(axis=0))
    return Dataset(values, tuple(cardinalities), tuple(names) if names else ())


def load_csv(path, has_header: bool = False) -> Dataset:
    """Read a comma-separated file of categorical tokens.

    Tokens are mapped to level indices in lexicographic order per column, so
    shuffled copies of a file load identically. Empty cells are rejected.
    """
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    rows = [r for r in rows if r]
    names: list[str] = []
    if has_header:
        if not rows:
            raise DataError("missing header row")
        names = [h.strip() for h in rows[0]]
        rows = rows[1:]
    if not rows:
        raise DataError(f"{path}: no data rows")
    p = len(rows[0])
    for lineno, row in enumerate(rows, start=2 if has_header else 1):
        if len(row) != p:
            raise DataError(f"{path}:{lineno}: ragged row ({len(row)} fields, expected {p})")
    tokens = np.array(rows, dtype=object)
    cols = []
    cards = []
    for j in range(p):
        col = [t.strip() for t in tokens[:, j]]
        if any(t == "" for t in col):
            raise DataError(f"{path}: missing value in column {j}")
        levels = sorted(set(col))
        if len(levels) < 2:
            raise DataError(f"{path}: degenerate variable in column {j} (single level {levels[0]!r})")
        lookup = {t: k for k, t in enumerate(levels)}
        cols.append([lookup[t] for t in col])
        cards.append(len(levels))
    values = np.array(cols, dtype=np.int64).T
    return Dataset(values, tuple(cards), tuple(names) if names else ())


def write_csv(data: Dataset, path, header: bool = True) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header:
            w.writerow(data.names)
        widths = [len(str(r - 1)) for r in data.cardinalities]
        for row in data.values.tolist():
            w.writerow([str(v).zfill(wd) for v, wd in zip(row, widths)])
