"""Multi-view heterogeneous graph-transformer encoder.

One encoder pass works on a single view combination (one view chosen per
node type). Per layer, every edge gets a per-head attention score
key(src) . W_att . query(dst) scaled by a learnable meta-relation factor
and 1/sqrt(d); scores are softmax-normalized per (target node, head)
across all incoming edges of every relation, including the automatic
reverses. Messages are per-head linear maps of the source state; the
weighted message sum passes through a per-type output projection, a relu,
and a residual connection.

Parameters live in a flat path -> Tensor mapping (see ``param_paths``).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Mapping

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import DataError, NumericalError
from .graph import HetGraph
from .views import ViewPartition, view_slice


@dataclass(frozen=True)
class EncoderConfig:
    """Architecture knobs; ``attn_scale`` picks the score divisor."""

    hidden_dim: int = 64
    out_dim: int = 16
    heads: int = 2
    depth: int = 2
    attn_scale: str = "overall"  # "overall" -> sqrt(h1), "per_head" -> sqrt(h1/h)

    def __post_init__(self):
        if self.hidden_dim % self.heads != 0:
            raise DataError(f"heads ({self.heads}) must divide hidden_dim "
                            f"({self.hidden_dim})")
        if self.depth < 1:
            raise DataError("depth must be >= 1")
        if self.attn_scale not in ("overall", "per_head"):
            raise DataError(f"unknown attn_scale: {self.attn_scale!r}")

    @property
    def head_dim(self) -> int:
        return self.hidden_dim // self.heads

    @property
    def scale_divisor(self) -> float:
        d = self.hidden_dim if self.attn_scale == "overall" else self.head_dim
        return float(np.sqrt(d))


@dataclass(frozen=True)
class ViewCombination:
    """One view index per node type; ``ordinal`` is 1-based over all K."""

    assignment: tuple[tuple[str, int], ...]
    ordinal: int

    def view_of(self, type_name: str) -> int:
        for name, v in self.assignment:
            if name == type_name:
                return v
        raise DataError(f"combination has no view for type {type_name!r}")


def enumerate_view_combinations(g: HetGraph) -> list[ViewCombination]:
    """All K = prod_a k_a combinations in lexicographic (type, view) order."""
    names = g.type_names
    ranges = [range(g.node_type(n).num_views) for n in names]
    combos = []
    for ordinal, views in enumerate(product(*ranges), start=1):
        combos.append(ViewCombination(tuple(zip(names, views)), ordinal))
    return combos


# ---------------------------------------------------------------------------
# Parameter paths
# ---------------------------------------------------------------------------

def in_proj_path(type_name: str, view: int) -> str:
    return f"encoder.in:{type_name}.view{view}"


def kqm_path(layer: int, type_name: str, which: str, head: int) -> str:
    return f"encoder.layer{layer}.type:{type_name}.{which}{head}"


def rel_path(layer: int, relation: str, head: int, which: str) -> str:
    return f"encoder.layer{layer}.rel:{relation}.head{head}.{which}"


def out_path(layer: int, type_name: str) -> str:
    return f"encoder.layer{layer}.out:{type_name}"


META_SCALE_PATH = "encoder.meta_scale"


def _weight(params: Mapping[str, Tensor], path: str) -> Tensor:
    try:
        return params[path + ".weight"]
    except KeyError:
        raise DataError(f"missing parameter: {path}.weight") from None


def _bias(params: Mapping[str, Tensor], path: str) -> Tensor:
    try:
        return params[path + ".bias"]
    except KeyError:
        raise DataError(f"missing parameter: {path}.bias") from None


def _linear(params: Mapping[str, Tensor], path: str, x: Tensor) -> Tensor:
    return ad.add(ad.matmul(x, _weight(params, path)), _bias(params, path))


# ---------------------------------------------------------------------------
# Forward passes
# ---------------------------------------------------------------------------

def project_inputs(g: HetGraph, partition: ViewPartition, combo: ViewCombination,
                   params: Mapping[str, Tensor],
                   inputs: Mapping[str, np.ndarray] | None = None
                   ) -> dict[str, Tensor]:
    """Per-type, per-view linear maps of the selected view slices into h1."""
    dtype = params[META_SCALE_PATH].dtype
    h0 = {}
    for t in g.node_types:
        v = combo.view_of(t.name)
        if inputs is not None:
            x = inputs[t.name]
        else:
            x = view_slice(g, partition, t.name, v)
        path = in_proj_path(t.name, v)
        w = _weight(params, path)
        if x.shape[1] != w.shape[0]:
            raise DataError(f"type {t.name} view {v}: input dim {x.shape[1]} "
                            f"does not match projection ({w.shape[0]})")
        h0[t.name] = ad.add(ad.matmul(ad.constant(x, dtype=dtype), w),
                            _bias(params, path))
    return h0


def _as_tensor_state(h, dtype) -> dict[str, Tensor]:
    return {k: (v if isinstance(v, Tensor) else ad.constant(v, dtype=dtype))
            for k, v in h.items()}


def _edge_plans(g: HetGraph) -> dict:
    """Per-graph scatter plans for the static edge structure (memoized).

    For every relation: gather-backward plans over its src/dst indices.
    For every target type: the concatenated incoming-edge segment array
    (relation blocks in ``g.relations`` order) and its softmax/sum plan.
    """
    cached = getattr(g, "_edge_plan_cache", None)
    if cached is not None:
        return cached
    per_relation = {}
    per_target: dict[str, dict] = {}
    for r in g.relations:
        e = g.edges[r.name]
        if len(e) == 0:
            continue
        src_idx, dst_idx = e[:, 0], e[:, 1]
        per_relation[r.name] = {
            "src_idx": src_idx,
            "dst_idx": dst_idx,
            "src_plan": ad.ScatterPlan(src_idx, g.node_type(r.src_type).num_nodes),
            "dst_plan": ad.ScatterPlan(dst_idx, g.node_type(r.dst_type).num_nodes),
        }
        tgt = per_target.setdefault(r.dst_type, {"relations": [], "segments": []})
        tgt["relations"].append((r.name, len(e)))
        tgt["segments"].append(dst_idx)
    for name, tgt in per_target.items():
        seg = np.concatenate(tgt["segments"])
        tgt["segments"] = seg
        tgt["plan"] = ad.ScatterPlan(seg, g.node_type(name).num_nodes)
    plans = {"per_relation": per_relation, "per_target": per_target}
    try:
        g._edge_plan_cache = plans
    except AttributeError:  # pragma: no cover - HetGraph has no slots today
        pass
    return plans


def _attention_messages(h_prev: dict[str, Tensor], g: HetGraph,
                        params: Mapping[str, Tensor], config: EncoderConfig,
                        layer: int, collect: bool = False):
    """Raw scores, grouped softmax and weighted message sums for one layer.

    Returns (h_tilde per type, per-(relation, head) attention weights,
    per-(relation, head) raw scores); the last two only when ``collect``.
    """
    heads = config.heads
    mu = params[META_SCALE_PATH]
    type_index = {name: i for i, name in enumerate(g.type_names)}
    rel_index = {r.name: i for i, r in enumerate(g.relations)}
    relations = {r.name: r for r in g.relations}
    plans = _edge_plans(g)
    inv_scale = 1.0 / config.scale_divisor

    keys, queries, msgs = {}, {}, {}
    for t in g.node_types:
        for i in range(heads):
            keys[t.name, i] = _linear(params, kqm_path(layer, t.name, "key", i),
                                      h_prev[t.name])
            queries[t.name, i] = _linear(params, kqm_path(layer, t.name, "query", i),
                                         h_prev[t.name])
            msgs[t.name, i] = _linear(params, kqm_path(layer, t.name, "message", i),
                                      h_prev[t.name])

    h_tilde: dict[str, Tensor] = {}
    att_weights: dict[tuple[str, int], Tensor] = {}
    raw_scores: dict[tuple[str, int], Tensor] = {}
    dtype = mu.dtype
    for t in g.node_types:
        n = t.num_nodes
        target = plans["per_target"].get(t.name)
        per_head = []
        for i in range(heads):
            if target is None:
                per_head.append(ad.constant(
                    np.zeros((n, config.head_dim), dtype=dtype)))
                continue
            raw_parts, msg_parts = [], []
            for rel_name, _count in target["relations"]:
                r = relations[rel_name]
                edges = plans["per_relation"][rel_name]
                mu_term = ad.pick(mu, (type_index[r.src_type], rel_index[rel_name],
                                       type_index[r.dst_type]))
                k_att = ad.matmul(keys[r.src_type, i],
                                  params[rel_path(layer, rel_name, i, "w_att")])
                raw = ad.tensor_sum(
                    ad.mul(ad.gather_rows(k_att, edges["src_idx"],
                                          plan=edges["src_plan"]),
                           ad.gather_rows(queries[r.dst_type, i], edges["dst_idx"],
                                          plan=edges["dst_plan"])),
                    axis=1)
                raw = ad.mul(raw, ad.mul(mu_term,
                                         ad.constant(inv_scale, dtype=dtype)))
                if not np.isfinite(raw.data).all():
                    raise NumericalError(f"non-finite attention score at layer "
                                         f"{layer}, relation {rel_name}")
                raw_parts.append(raw)
                msg_parts.append(ad.gather_rows(
                    ad.matmul(msgs[r.src_type, i],
                              params[rel_path(layer, rel_name, i, "w_mes")]),
                    edges["src_idx"], plan=edges["src_plan"]))
            raw_all = raw_parts[0] if len(raw_parts) == 1 else ad.concat(raw_parts)
            msg_all = msg_parts[0] if len(msg_parts) == 1 else ad.concat(msg_parts)
            seg = target["segments"]
            att = ad.segment_softmax(raw_all, seg, n, plan=target["plan"])
            weighted = ad.mul(msg_all, ad.reshape(att, (att.shape[0], 1)))
            per_head.append(ad.segment_sum(weighted, seg, n, plan=target["plan"]))
            if collect:  # expose per-relation slices for inspection/tests
                offset = 0
                for rel_name, count in target["relations"]:
                    att_weights[rel_name, i] = _slice_rows(att, offset, count)
                    raw_scores[rel_name, i] = _slice_rows(raw_all, offset, count)
                    offset += count
        h_tilde[t.name] = per_head[0] if heads == 1 else ad.concat(per_head, axis=1)
    return h_tilde, att_weights, raw_scores


def _slice_rows(t: Tensor, start: int, count: int) -> Tensor:
    return ad.gather_rows(t, np.arange(start, start + count))


def edge_attention(h_prev, g: HetGraph, params: Mapping[str, Tensor],
                   config: EncoderConfig, layer: int, return_raw: bool = False
                   ) -> dict[tuple[str, int], np.ndarray]:
    """Per-(relation, head) attention weights, aligned with edge storage order.

    Weights of every (target node, head) group sum to 1 across all incoming
    edges; isolated targets simply contribute no entries.
    """
    h_prev = _as_tensor_state(h_prev, params[META_SCALE_PATH].dtype)
    _, att, raw = _attention_messages(h_prev, g, params, config, layer,
                                      collect=True)
    if return_raw:
        return {k: v.data.copy() for k, v in raw.items()}
    return {k: v.data.copy() for k, v in att.items()}


def layer_forward(h_prev, g: HetGraph, params: Mapping[str, Tensor],
                  config: EncoderConfig, layer: int) -> dict[str, Tensor]:
    """One attention/message/update layer with relu output and residual."""
    dtype = params[META_SCALE_PATH].dtype
    h_prev = _as_tensor_state(h_prev, dtype)
    h_tilde, _, _ = _attention_messages(h_prev, g, params, config, layer)
    out = {}
    for t in g.node_types:
        updated = ad.relu(_linear(params, out_path(layer, t.name), h_tilde[t.name]))
        out[t.name] = ad.add(updated, h_prev[t.name])
        if not np.isfinite(out[t.name].data).all():
            raise NumericalError(f"non-finite state at layer {layer}, type {t.name}")
    return out


def encode_combination(g: HetGraph, partition: ViewPartition,
                       combo: ViewCombination, params: Mapping[str, Tensor],
                       config: EncoderConfig,
                       inputs: Mapping[str, np.ndarray] | None = None
                       ) -> dict[str, Tensor]:
    """Input projection followed by ``depth`` layers for one combination."""
    h = project_inputs(g, partition, combo, params, inputs=inputs)
    for layer in range(config.depth):
        h = layer_forward(h, g, params, config, layer)
    return h
