"""Contingency-table schemas, the canonical cell order, design matrices for
the identity and corner parametrizations, and table marginalization.

Canonical cell order is mixed-radix ascending with the LAST variable varying
fastest, e.g. for three binary variables: 000, 001, 010, 011, 100, 101, 110,
111. This equals C-order raveling of the count array, and all serialization
uses it. The baseline cell (0, ..., 0) comes first; the remaining cells, in
the same order, index both the log-ratio coordinates and the columns of the
corner design matrix. Under this ordering the corner matrix is unit lower
triangular, hence trivially non-singular.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "TableSchema",
    "ContingencyTable",
    "DesignMatrix",
    "canonical_cell_order",
    "identity_design",
    "corner_design",
    "to_theta_star",
    "from_theta_star",
    "marginalize",
]


@dataclass(frozen=True)
class TableSchema:
    """Level counts (d_1, ..., d_p) of the cross-classified variables."""

    levels: tuple[int, ...]

    def __init__(self, levels):
        levels = tuple(int(v) for v in levels)
        if len(levels) < 1 or any(v < 2 for v in levels):
            raise ValueError(f"every variable needs at least 2 levels, got {levels}")
        object.__setattr__(self, "levels", levels)

    @property
    def p(self) -> int:
        return len(self.levels)

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.levels))

    @property
    def d(self) -> int:
        """Number of free parameters: one fewer than the cell count."""
        return self.n_cells - 1


@dataclass(frozen=True)
class ContingencyTable:
    """Vectorized cell counts in canonical order; counts[0] is the baseline cell."""

    schema: TableSchema
    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.shape != (self.schema.n_cells,):
            raise ValueError(
                f"expected {self.schema.n_cells} cell counts, got shape {counts.shape}"
            )
        if np.any(counts < 0) or not np.all(np.isfinite(counts.astype(float))):
            raise ValueError("cell counts must be nonnegative")
        if not np.all(counts == np.floor(counts)):
            raise ValueError("cell counts must be integers")
        counts = counts.astype(np.int64)
        counts.flags.writeable = False
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def canonical_cell_order(schema: TableSchema) -> list[tuple[int, ...]]:
    """All cells in canonical order, (0, ..., 0) first."""
    grids = np.indices(schema.levels).reshape(schema.p, -1).T
    return [tuple(int(v) for v in row) for row in grids]


@dataclass(frozen=True)
class DesignMatrix:
    """Binary non-singular reparametrization matrix for log(p/p_0) = X t*.

    Rows and columns are both indexed by the non-baseline cells in canonical
    order; `labels` carries that indexing so consumers never rely on
    positional conventions.
    """

    entries: np.ndarray
    kind: str
    schema: TableSchema
    labels: tuple[tuple[int, ...], ...] = field(repr=False)

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=np.int8)
        d = self.schema.d
        if entries.shape != (d, d):
            raise ValueError(f"design matrix must be {d}x{d}, got {entries.shape}")
        if not np.all((entries == 0) | (entries == 1)):
            raise ValueError("design matrix entries must be 0/1")
        # Non-singularity: both supported kinds are unit lower triangular in
        # canonical order, which an O(d^2) check certifies exactly.
        if np.any(np.diag(entries) != 1) or np.any(np.triu(entries, 1) != 0):
            raise ValueError("design matrix is not unit lower triangular in canonical order")
        entries.flags.writeable = False
        object.__setattr__(self, "entries", entries)
        if self.kind not in ("identity", "corner"):
            raise ValueError(f"unknown design matrix kind {self.kind!r}")
        if len(self.labels) != d:
            raise ValueError("label count must match dimension")

    @property
    def d(self) -> int:
        return self.schema.d


def _nonzero_cells(schema: TableSchema) -> list[tuple[int, ...]]:
    return canonical_cell_order(schema)[1:]


def identity_design(schema: TableSchema) -> DesignMatrix:
    cells = _nonzero_cells(schema)
    return DesignMatrix(np.eye(schema.d, dtype=np.int8), "identity", schema, tuple(cells))


def corner_design(schema: TableSchema) -> DesignMatrix:
    """Design matrix of the corner parametrization.

    The row for cell i has a 1 in the column of cell u whenever u is i with
    some (possibly none) of its nonzero coordinates zeroed out, i.e. the
    row sums the main effects and interactions of every nonempty subset of
    i's active variables.
    """
    cells = _nonzero_cells(schema)
    index = {cell: k for k, cell in enumerate(cells)}
    d = schema.d
    entries = np.zeros((d, d), dtype=np.int8)
    for row, cell in enumerate(cells):
        active = [v for v, level in enumerate(cell) if level != 0]
        for mask in range(1, 1 << len(active)):
            sub = list(cell)
            for bit, v in enumerate(active):
                if not (mask >> bit) & 1:
                    sub[v] = 0
            entries[row, index[tuple(sub)]] = 1
    return DesignMatrix(entries, "corner", schema, tuple(cells))


def _as_vector(theta, d: int) -> np.ndarray:
    from .simplex import NaturalParam

    if isinstance(theta, NaturalParam):
        theta = theta.theta
    arr = np.asarray(theta, dtype=float)
    if arr.shape != (d,):
        raise ValueError(f"expected a length-{d} vector, got shape {arr.shape}")
    return arr


def to_theta_star(theta, design: DesignMatrix) -> np.ndarray:
    """Solve X t* = t for t*. Uses a triangular-friendly factored solve."""
    t = _as_vector(theta, design.d)
    return np.linalg.solve(design.entries.astype(float), t)


def from_theta_star(theta_star, design: DesignMatrix) -> np.ndarray:
    """Evaluate t = X t*."""
    ts = _as_vector(theta_star, design.d)
    return design.entries.astype(float) @ ts


def marginalize(table: ContingencyTable, keep) -> ContingencyTable:
    """Collapse a table onto a subset of variables, summing out the rest.

    `keep` holds 0-based variable indices; their original relative order is
    preserved in the result. The grand total is unchanged.
    """
    keep = sorted(set(int(v) for v in keep))
    p = table.schema.p
    if not keep:
        raise ValueError("keep must name at least one variable")
    if keep[0] < 0 or keep[-1] >= p:
        raise ValueError(f"variable indices must lie in [0, {p}), got {keep}")
    drop = tuple(v for v in range(p) if v not in keep)
    cube = table.counts.reshape(table.schema.levels)
    if drop:
        cube = cube.sum(axis=drop)
    new_schema = TableSchema(tuple(table.schema.levels[v] for v in keep))
    return ContingencyTable(new_schema, cube.reshape(-1))
