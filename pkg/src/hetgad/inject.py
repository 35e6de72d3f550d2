"""Ground-truth anomaly creation: attribute swaps and structural cliques.

Attribute anomalies: for each selected node, sample k same-type peers and
copy over the attributes of the most distant one. Structural anomalies:
repeatedly pick a group of m nodes split across one relation's endpoint
types and connect every cross pair, so each group forms a complete
bipartite block under that relation. Both ops label the touched nodes,
never relabel an already-anomalous node, and return a fresh graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import DataError
from .graph import (LABEL_ATTRIBUTE, LABEL_NONE, LABEL_STRUCTURAL, HetGraph,
                    reverse_name)


@dataclass(frozen=True)
class InjectionConfig:
    """Counts and sizes for both injection procedures."""

    attr_n: Mapping[str, int] = field(default_factory=dict)
    attr_k: int = 50
    struct_m: int = 15
    struct_c: int = 0
    struct_relation: str | None = None
    seed: int = 0

    def scaled(self, factor: int) -> "InjectionConfig":
        """Multiply anomaly counts (attr targets and clique count) by factor."""
        return InjectionConfig(
            attr_n={k: v * factor for k, v in self.attr_n.items()},
            attr_k=self.attr_k,
            struct_m=self.struct_m,
            struct_c=self.struct_c * factor,
            struct_relation=self.struct_relation,
            seed=self.seed,
        )


@dataclass
class InjectionReport:
    """What was perturbed; ``labeled`` lists (type, local index) pairs."""

    labeled: list[tuple[str, int]] = field(default_factory=list)
    attribute_swaps: list[dict] = field(default_factory=list)
    cliques: list[dict] = field(default_factory=list)

    def merged(self, other: "InjectionReport") -> "InjectionReport":
        return InjectionReport(
            labeled=self.labeled + other.labeled,
            attribute_swaps=self.attribute_swaps + other.attribute_swaps,
            cliques=self.cliques + other.cliques,
        )

    def to_dict(self) -> dict:
        return {
            "n_labeled": len(self.labeled),
            "labeled": [{"type": t, "index": i} for t, i in self.labeled],
            "attribute_swaps": self.attribute_swaps,
            "cliques": self.cliques,
        }


def inject_attribute_anomalies(g: HetGraph, cfg: InjectionConfig
                               ) -> tuple[HetGraph, InjectionReport]:
    """Swap each target's attributes with its most distant sampled peer."""
    if cfg.attr_k < 1:
        raise DataError("attr_k must be >= 1")
    rng = np.random.default_rng(cfg.seed)
    labels = {k: v.copy() for k, v in (g.labels or {}).items()}
    for t in g.node_types:
        labels.setdefault(t.name, np.zeros(t.num_nodes, dtype=np.int8))
    attrs = {k: v.copy() for k, v in g.attrs.items()}
    report = InjectionReport()

    for t in g.node_types:
        n = int(cfg.attr_n.get(t.name, 0))
        if n == 0:
            continue
        eligible = np.flatnonzero(labels[t.name] == LABEL_NONE)
        if n + cfg.attr_k > len(eligible):
            raise DataError(
                f"type {t.name}: need {n} targets plus {cfg.attr_k} pool nodes "
                f"but only {len(eligible)} unlabeled nodes exist")
        targets = rng.choice(eligible, size=n, replace=False)
        pool = np.setdiff1d(eligible, targets)
        x = attrs[t.name]
        for i in targets:
            cand = rng.choice(pool, size=cfg.attr_k, replace=False)
            d2 = ((x[cand] - x[i]) ** 2).sum(axis=1)
            j = int(cand[int(np.argmax(d2))])
            x[i] = x[j]
            labels[t.name][i] = LABEL_ATTRIBUTE
            report.labeled.append((t.name, int(i)))
            report.attribute_swaps.append(
                {"type": t.name, "node": int(i), "source": j,
                 "distance_sq": float(d2.max()),
                 "candidates": [int(c) for c in cand]})
    return g.replace(attrs=attrs, labels=labels), report


def inject_structural_anomalies(g: HetGraph, cfg: InjectionConfig
                                ) -> tuple[HetGraph, InjectionReport]:
    """Wire c node-disjoint complete bipartite groups of m nodes each."""
    if cfg.struct_c == 0:
        labels = {k: v.copy() for k, v in (g.labels or {}).items()}
        for t in g.node_types:
            labels.setdefault(t.name, np.zeros(t.num_nodes, dtype=np.int8))
        return g.replace(labels=labels), InjectionReport()
    if cfg.struct_relation is None:
        raise DataError("struct_relation is required when struct_c > 0")
    if cfg.struct_m < 2:
        raise DataError("struct_m must be >= 2")
    rel = g.relation(cfg.struct_relation)
    if rel.is_reverse:
        raise DataError(f"struct_relation {rel.name!r} is a reverse relation; "
                        "use the declared one")

    rng = np.random.default_rng(cfg.seed)
    labels = {k: v.copy() for k, v in (g.labels or {}).items()}
    for t in g.node_types:
        labels.setdefault(t.name, np.zeros(t.num_nodes, dtype=np.int8))
    report = InjectionReport()

    n_src_pick = math.ceil(cfg.struct_m / 2)
    n_dst_pick = cfg.struct_m // 2
    existing = {(int(s), int(d)) for s, d in g.edges[rel.name]}
    new_pairs: list[tuple[int, int]] = []

    for _ in range(cfg.struct_c):
        if rel.src_type == rel.dst_type:
            eligible = np.flatnonzero(labels[rel.src_type] == LABEL_NONE)
            if len(eligible) < cfg.struct_m:
                raise DataError(f"type {rel.src_type}: not enough unlabeled nodes "
                                f"for a group of {cfg.struct_m}")
            picked = rng.choice(eligible, size=cfg.struct_m, replace=False)
            src_nodes, dst_nodes = picked[:n_src_pick], picked[n_src_pick:]
        else:
            elig_src = np.flatnonzero(labels[rel.src_type] == LABEL_NONE)
            elig_dst = np.flatnonzero(labels[rel.dst_type] == LABEL_NONE)
            if len(elig_src) < n_src_pick or len(elig_dst) < n_dst_pick:
                raise DataError(
                    f"relation {rel.name}: not enough unlabeled endpoint nodes "
                    f"({len(elig_src)} src / {len(elig_dst)} dst) for a group of "
                    f"{cfg.struct_m}")
            src_nodes = rng.choice(elig_src, size=n_src_pick, replace=False)
            dst_nodes = rng.choice(elig_dst, size=n_dst_pick, replace=False)

        added = 0
        for s in src_nodes:
            for d in dst_nodes:
                pair = (int(s), int(d))
                if pair in existing:
                    continue
                existing.add(pair)
                new_pairs.append(pair)
                added += 1
        for s in src_nodes:
            labels[rel.src_type][s] = LABEL_STRUCTURAL
            report.labeled.append((rel.src_type, int(s)))
        for d in dst_nodes:
            labels[rel.dst_type][d] = LABEL_STRUCTURAL
            report.labeled.append((rel.dst_type, int(d)))
        report.cliques.append({
            "relation": rel.name,
            "src_nodes": [int(s) for s in src_nodes],
            "dst_nodes": [int(d) for d in dst_nodes],
            "new_edges": added,
        })

    edges = {k: v for k, v in g.edges.items()}
    if new_pairs:
        block = np.asarray(new_pairs, dtype=np.int64)
        edges[rel.name] = np.concatenate([g.edges[rel.name], block], axis=0)
        edges[reverse_name(rel.name)] = np.concatenate(
            [g.edges[reverse_name(rel.name)], block[:, ::-1]], axis=0)
    return g.replace(edges=edges, labels=labels), report


def inject_anomalies(g: HetGraph, cfg: InjectionConfig
                     ) -> tuple[HetGraph, InjectionReport]:
    """Attribute injection first, then structural on the remaining nodes."""
    g1, rep_a = inject_attribute_anomalies(g, cfg)
    g2, rep_s = inject_structural_anomalies(g1, cfg)
    return g2, rep_a.merged(rep_s)
