"""Structure, attribute and node-type decoders, losses, and anomaly scores.

Reconstructions: adjacency of each declared relation from a sigmoid inner
product of endpoint embeddings; attributes from a relu linear map with a
per-node bias; node types from a per-type linear map modulated by a
learnable type-attention vector and row softmax. Losses are un-squared
Frobenius norms (epsilon-smoothed so the gradient exists at zero
residual); a squared variant is available. Scores combine per-node
residual norms with simplex weights.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import DataError
from .graph import GlobalNodeIndex, HetGraph, global_index

FROBENIUS_EPS = 1e-12
DENSE_NODE_BUDGET = 50_000

TYPE_ATTENTION_PATH = "decode.type_attention"


def attr_decoder_path(type_name: str) -> str:
    return f"decode.attr:{type_name}"


def type_decoder_path(type_name: str) -> str:
    return f"decode.ntype:{type_name}"


@dataclass(frozen=True)
class ScoreWeights:
    """Simplex weights over (structure, attribute, node-type) residuals."""

    structure: float = 0.4
    attribute: float = 0.4

    def __post_init__(self):
        if not (0.0 <= self.structure <= 1.0 and 0.0 <= self.attribute <= 1.0):
            raise DataError("score weights must lie in [0, 1]")
        if self.structure + self.attribute > 1.0 + 1e-12:
            raise DataError("score weights must satisfy structure + attribute <= 1")

    @property
    def node_type(self) -> float:
        return max(0.0, 1.0 - self.structure - self.attribute)

    def triple(self) -> tuple[float, float, float]:
        return self.structure, self.attribute, self.node_type

    def drop(self, term: str) -> tuple[float, float, float]:
        """Zero one term and renormalize the rest proportionally."""
        w = dict(zip(("structure", "attribute", "node_type"), self.triple()))
        if term not in w:
            raise DataError(f"unknown score term: {term!r}")
        w[term] = 0.0
        s = sum(w.values())
        if s <= 0.0:
            raise DataError(f"dropping {term!r} leaves zero total score weight")
        return tuple(w[k] / s for k in ("structure", "attribute", "node_type"))


@dataclass
class Reconstruction:
    """Plain-array snapshot of the reconstructions (empty/None for any
    decoder that was disabled, e.g. in an ablation variant)."""

    adj: dict[str, np.ndarray]              # per declared relation
    attrs: dict[str, np.ndarray]            # per node type
    node_types: np.ndarray | None           # |V| x |A|, global index order


def _check_budget(g: HetGraph) -> None:
    for t in g.node_types:
        if t.num_nodes > DENSE_NODE_BUDGET:
            raise DataError(
                f"type {t.name} has {t.num_nodes} nodes; dense reconstruction "
                f"is capped at {DENSE_NODE_BUDGET} per type")


def reconstruct_structure(z: Mapping[str, Tensor], g: HetGraph) -> dict[str, Tensor]:
    """sigmoid(Z_src Z_dst^T) for every declared (non-reverse) relation."""
    _check_budget(g)
    return {
        r.name: ad.sigmoid(ad.matmul(z[r.src_type], ad.transpose(z[r.dst_type])))
        for r in g.declared_relations
    }


def _norm_term(diff: Tensor, mode: str) -> Tensor:
    ss = ad.tensor_sum(ad.square(diff))
    if mode == "squared":
        return ss
    if mode == "frobenius":
        return ad.sqrt(ad.add(ss, ad.constant(FROBENIUS_EPS, dtype=diff.dtype)))
    raise DataError(f"unknown loss mode: {mode!r}")


def structure_loss(g: HetGraph, adj_recon: Mapping[str, Tensor],
                   mode: str = "frobenius",
                   dense_adj: Mapping[str, np.ndarray] | None = None) -> Tensor:
    """Sum of per-relation reconstruction norms over declared relations."""
    total = None
    for r in g.declared_relations:
        a = dense_adj[r.name] if dense_adj is not None else g.dense_adjacency(r.name)
        recon = adj_recon[r.name]
        diff = ad.sub(ad.constant(a, dtype=recon.dtype), recon)
        term = _norm_term(diff, mode)
        total = term if total is None else ad.add(total, term)
    if total is None:
        total = ad.constant(0.0)
    return total


def reconstruct_attributes(z: Mapping[str, Tensor], params: Mapping[str, Tensor],
                           g: HetGraph) -> dict[str, Tensor]:
    """relu(Z W + B) per type; B is a per-node bias matrix."""
    out = {}
    for t in g.node_types:
        path = attr_decoder_path(t.name)
        w = params[path + ".weight"]
        b = params[path + ".bias"]
        if w.shape[1] != t.attr_dim or b.shape != (t.num_nodes, t.attr_dim):
            raise DataError(f"type {t.name}: attribute decoder shapes do not "
                            f"match ({w.shape}, {b.shape})")
        out[t.name] = ad.relu(ad.add(ad.matmul(z[t.name], w), b))
    return out


def attribute_loss(g: HetGraph, attr_recon: Mapping[str, Tensor],
                   mode: str = "frobenius") -> Tensor:
    total = None
    for t in g.node_types:
        recon = attr_recon[t.name]
        diff = ad.sub(ad.constant(g.attrs[t.name], dtype=recon.dtype), recon)
        term = _norm_term(diff, mode)
        total = term if total is None else ad.add(total, term)
    return total if total is not None else ad.constant(0.0)


def node_type_onehot(g: HetGraph, index: GlobalNodeIndex | None = None) -> np.ndarray:
    """|V| x |A| one-hot rows stacked in global index order."""
    if index is None:
        index = global_index(g)
    t = np.zeros((index.total, len(g.node_types)), dtype=np.float64)
    for col, spec in enumerate(g.node_types):
        t[index.slice_of(spec.name), col] = 1.0
    return t


def reconstruct_node_types(z: Mapping[str, Tensor], params: Mapping[str, Tensor],
                           g: HetGraph) -> Tensor:
    """Per-type logits, type-attention modulation, row softmax, stacked."""
    w_t = params[TYPE_ATTENTION_PATH]
    rows = []
    for t in g.node_types:
        logits = ad.add(ad.matmul(z[t.name], params[type_decoder_path(t.name) + ".weight"]),
                        params[type_decoder_path(t.name) + ".bias"])
        rows.append(ad.softmax_rows(ad.mul(logits, ad.reshape(w_t, (1, w_t.shape[0])))))
    return rows[0] if len(rows) == 1 else ad.concat(rows, axis=0)


def node_type_loss(onehot: np.ndarray, recon: Tensor, mode: str = "frobenius") -> Tensor:
    diff = ad.sub(ad.constant(onehot, dtype=recon.dtype), recon)
    return _norm_term(diff, mode)


def total_loss(l_a: Tensor, l_s: Tensor, l_t: Tensor) -> Tensor:
    """Unweighted sum of the three reconstruction losses."""
    return ad.add(ad.add(l_a, l_s), l_t)


# ---------------------------------------------------------------------------
# Anomaly scoring (post-training; plain numpy)
# ---------------------------------------------------------------------------

@dataclass
class ScoreReport:
    """Per-node scores in global index order, with residual breakdown."""

    index: GlobalNodeIndex
    score: np.ndarray
    probability: np.ndarray
    rank: np.ndarray
    r_struct: np.ndarray
    r_attr: np.ndarray
    r_type: np.ndarray

    def for_type(self, type_name: str) -> np.ndarray:
        return self.score[self.index.slice_of(type_name)]


def structure_residuals(g: HetGraph, recon: Reconstruction,
                        index: GlobalNodeIndex,
                        dense_adj: Mapping[str, np.ndarray] | None = None
                        ) -> np.ndarray:
    """Per node: row norms where its type is a source plus column norms
    where it is a target, over declared relations. Zero when the structure
    decoder was disabled (no reconstructed adjacencies)."""
    out = np.zeros(index.total)
    if not recon.adj:
        return out
    for r in g.declared_relations:
        a = dense_adj[r.name] if dense_adj is not None else g.dense_adjacency(r.name)
        if r.name not in recon.adj:
            raise DataError(f"reconstruction missing relation {r.name!r}")
        diff = a - recon.adj[r.name]
        out[index.slice_of(r.src_type)] += np.sqrt((diff ** 2).sum(axis=1))
        out[index.slice_of(r.dst_type)] += np.sqrt((diff ** 2).sum(axis=0))
    return out


def anomaly_score(g: HetGraph, recon: Reconstruction, weights: ScoreWeights,
                  index: GlobalNodeIndex | None = None,
                  weight_triple: tuple[float, float, float] | None = None,
                  dense_adj: Mapping[str, np.ndarray] | None = None
                  ) -> ScoreReport:
    """Weighted residual-norm score per node plus max-normalized probability."""
    if index is None:
        index = global_index(g)
    w_s, w_a, w_t = weight_triple if weight_triple is not None else weights.triple()

    r_struct = structure_residuals(g, recon, index, dense_adj=dense_adj)
    r_attr = np.zeros(index.total)
    if recon.attrs:
        for t in g.node_types:
            if t.name not in recon.attrs:
                raise DataError(f"reconstruction missing attrs for {t.name!r}")
            diff = g.attrs[t.name] - recon.attrs[t.name]
            r_attr[index.slice_of(t.name)] = np.sqrt((diff ** 2).sum(axis=1))
    if recon.node_types is None:
        r_type = np.zeros(index.total)
    else:
        onehot = node_type_onehot(g, index)
        r_type = np.sqrt(((onehot - recon.node_types) ** 2).sum(axis=1))

    score = w_s * r_struct + w_a * r_attr + w_t * r_type
    probability = anomaly_probability(score)
    order = np.argsort(-score, kind="stable")
    rank = np.empty(index.total, dtype=np.int64)
    rank[order] = np.arange(1, index.total + 1)
    return ScoreReport(index=index, score=score, probability=probability,
                       rank=rank, r_struct=r_struct, r_attr=r_attr, r_type=r_type)


def anomaly_probability(scores: np.ndarray) -> np.ndarray:
    """Scores divided by their max; all zeros stay all zeros."""
    scores = np.asarray(scores, dtype=np.float64)
    m = scores.max() if scores.size else 0.0
    if m <= 0.0:
        return np.zeros_like(scores)
    return scores / m


# ---------------------------------------------------------------------------
# scores.csv
# ---------------------------------------------------------------------------

SCORES_HEADER = "type,local_index,score,probability,rank,r_struct,r_attr,r_type"


def write_scores_csv(report: ScoreReport, path) -> None:
    lines = [SCORES_HEADER]
    for gidx in range(report.index.total):
        tname, local = report.index.local_of(gidx)
        lines.append(",".join([
            tname, str(local),
            f"{report.score[gidx]:.17g}",
            f"{report.probability[gidx]:.17g}",
            str(int(report.rank[gidx])),
            f"{report.r_struct[gidx]:.17g}",
            f"{report.r_attr[gidx]:.17g}",
            f"{report.r_type[gidx]:.17g}",
        ]))
    Path(path).write_text("\n".join(lines) + "\n")


def read_scores_csv(path) -> dict[str, np.ndarray]:
    """Columns of a scores.csv: type names, local indices and score fields."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path}: file missing")
    types: list[str] = []
    numeric: list[list[float]] = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or (lineno == 1 and line.startswith("type,")):
                continue
            cells = line.split(",")
            if len(cells) != 8:
                raise DataError(f"{path}:{lineno}: expected 8 fields")
            try:
                numeric.append([float(c) for c in cells[1:]])
            except ValueError:
                raise DataError(f"{path}:{lineno}: malformed value") from None
            types.append(cells[0])
    cols = np.asarray(numeric, dtype=np.float64).reshape(len(types), 7)
    return {
        "type": np.asarray(types),
        "local_index": cols[:, 0].astype(np.int64),
        "score": cols[:, 1],
        "probability": cols[:, 2],
        "rank": cols[:, 3].astype(np.int64),
        "r_struct": cols[:, 4],
        "r_attr": cols[:, 5],
        "r_type": cols[:, 6],
    }
