"""Multi-view attribute column partitioning and optional standardization.

A view partition assigns every attribute column of a node type to exactly
one view. Random splits are a seeded column permutation chopped into
near-equal contiguous chunks; the partition is recorded on the graph
(``view_columns``) so training and scoring agree on views.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import DataError
from .graph import HetGraph, NodeTypeSpec

STD_FLOOR = 1e-12


@dataclass(frozen=True)
class ViewPartition:
    """Per node type, an ordered partition of attribute columns into views."""

    columns: dict[str, tuple[tuple[int, ...], ...]]
    seed: int | None = None

    def num_views(self, type_name: str) -> int:
        return len(self.columns[type_name])

    def view_dims(self, type_name: str) -> tuple[int, ...]:
        return tuple(len(v) for v in self.columns[type_name])


def split_views(g: HetGraph, views_per_type: Mapping[str, int], seed: int) -> ViewPartition:
    """Randomly partition each type's columns into the requested view count.

    Types absent from ``views_per_type`` keep their current view count but
    are re-randomized like the rest. Deterministic for a given seed.
    """
    for name in views_per_type:
        g.node_type(name)  # raises on unknown type
    rng = np.random.default_rng(seed)
    columns: dict[str, tuple[tuple[int, ...], ...]] = {}
    for t in g.node_types:
        k = int(views_per_type.get(t.name, t.num_views))
        d = t.attr_dim
        if k < 1 or k > d:
            raise DataError(f"type {t.name}: view count {k} outside [1, {d}]")
        perm = rng.permutation(d)
        sizes = _near_equal_sizes(d, k)
        views = []
        start = 0
        for s in sizes:
            views.append(tuple(int(c) for c in perm[start:start + s]))
            start += s
        columns[t.name] = tuple(views)
    return ViewPartition(columns=columns, seed=seed)


def _near_equal_sizes(total: int, parts: int) -> list[int]:
    base, extra = divmod(total, parts)
    return [base + 1] * extra + [base] * (parts - extra)


def partition_of(g: HetGraph) -> ViewPartition:
    """The graph's recorded partition, or contiguous chunks per view_dims."""
    if g.view_columns is not None:
        return ViewPartition(columns=dict(g.view_columns), seed=None)
    columns = {}
    for t in g.node_types:
        views = []
        start = 0
        for d in t.view_dims:
            views.append(tuple(range(start, start + d)))
            start += d
        columns[t.name] = tuple(views)
    return ViewPartition(columns=columns, seed=None)


def with_partition(g: HetGraph, partition: ViewPartition) -> HetGraph:
    """Record a partition on the graph, updating each type's view_dims."""
    new_types = []
    for t in g.node_types:
        cols = partition.columns.get(t.name)
        if cols is None:
            raise DataError(f"partition missing type {t.name}")
        flat = sorted(c for view in cols for c in view)
        if flat != list(range(t.attr_dim)):
            raise DataError(f"partition for type {t.name} is not a column partition")
        new_types.append(NodeTypeSpec(t.name, t.num_nodes,
                                      tuple(len(v) for v in cols)))
    return g.replace(node_types=tuple(new_types),
                     view_columns={k: v for k, v in partition.columns.items()})


def view_slice(g: HetGraph, partition: ViewPartition, type_name: str,
               view_index: int) -> np.ndarray:
    """Columns of one view, gathered in partition order."""
    cols = partition.columns[type_name]
    if not 0 <= view_index < len(cols):
        raise DataError(f"type {type_name}: view index {view_index} out of range "
                        f"[0, {len(cols)})")
    return g.attrs[type_name][:, list(cols[view_index])]


def standardize(g: HetGraph) -> HetGraph:
    """Zero-mean, unit sample-std columns; near-constant columns zeroed."""
    new_attrs = {}
    for t in g.node_types:
        x = g.attrs[t.name]
        if t.num_nodes < 2:
            new_attrs[t.name] = np.zeros_like(x)
            continue
        mean = x.mean(axis=0)
        std = x.std(axis=0, ddof=1)
        out = np.zeros_like(x)
        ok = std >= STD_FLOOR
        out[:, ok] = (x[:, ok] - mean[ok]) / std[ok]
        new_attrs[t.name] = out
    return g.replace(attrs=new_attrs)
