"""Parameter initialization, full-batch Adam training, gradient checking
and model-file persistence.

Every learnable array lives in one flat ``path -> Tensor`` mapping with
stable, human-readable paths. Weight matrices start Glorot-uniform,
biases at zero, the meta-relation scale and type-attention vectors at
one, view logits at zero. Training runs full-batch for a fixed number of
epochs with bias-corrected first/second-moment updates and additive L2
weight decay. ``grad_check`` compares the tape's gradients against
central finite differences on sampled scalar parameters.

Model file layout (version 1, all integers little-endian):

    bytes 0..7    magic b"HGADMDL\\x00"
    bytes 8..11   uint32 format version (1)
    bytes 12..19  uint64 header length H
    H bytes       UTF-8 JSON: {"format_version", "config", "schema_hash",
                  "arrays": [{"path", "shape"}, ...]}
    rest          per array, in listed order: row-major float64 values
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from . import autodiff as ad
from .aggregate import (OUT_LINEAR_PATH, VIEW_LOGITS_PATH, EmbeddingSet,
                        aggregate, out_project, view_weights)
from .autodiff import Tensor
from .decode import (TYPE_ATTENTION_PATH, Reconstruction, attr_decoder_path,
                     attribute_loss, node_type_loss, node_type_onehot,
                     reconstruct_attributes, reconstruct_node_types,
                     reconstruct_structure, structure_loss, total_loss,
                     type_decoder_path)
from .encoder import (META_SCALE_PATH, EncoderConfig, ViewCombination,
                      encode_combination, enumerate_view_combinations,
                      in_proj_path, kqm_path, out_path, rel_path)
from .errors import DataError, NumericalError
from .graph import (GlobalNodeIndex, HetGraph, NodeTypeSpec, RelationSpec,
                    build_graph, global_index)
from .views import ViewPartition, partition_of, view_slice

MODEL_MAGIC = b"HGADMDL\x00"
MODEL_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 5e-3
    weight_decay: float = 1e-5
    max_epochs: int = 100
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    precision: int = 64
    loss: str = "frobenius"  # or "squared"
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    use_structure: bool = True
    use_attribute: bool = True
    use_nodetype: bool = True

    def __post_init__(self):
        if self.learning_rate < 0 or self.weight_decay < 0:
            raise DataError("rates must be nonnegative")
        if self.max_epochs < 1:
            raise DataError("max_epochs must be >= 1")
        if self.precision not in (32, 64):
            raise DataError("precision must be 32 or 64")
        if self.loss not in ("frobenius", "squared"):
            raise DataError(f"unknown loss mode: {self.loss!r}")
        if not (self.use_structure or self.use_attribute or self.use_nodetype):
            raise DataError("at least one decoder must stay enabled")

    @property
    def dtype(self):
        return np.float32 if self.precision == 32 else np.float64


ModelParams = dict[str, Tensor]


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int, dtype) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out)).astype(dtype)


def init_params(g: HetGraph, partition: ViewPartition, config: TrainConfig,
                seed: int | None = None) -> ModelParams:
    """Fresh parameter store; deterministic for a given seed."""
    rng = np.random.default_rng(config.seed if seed is None else seed)
    enc = config.encoder
    dtype = config.dtype
    h1, h2, dh = enc.hidden_dim, enc.out_dim, enc.head_dim
    params: ModelParams = {}

    def linear(path: str, fan_in: int, fan_out: int) -> None:
        params[path + ".weight"] = ad.parameter(_glorot(rng, fan_in, fan_out, dtype), dtype)
        params[path + ".bias"] = ad.parameter(np.zeros(fan_out, dtype=dtype), dtype)

    for t in g.node_types:
        for v, cols in enumerate(partition.columns[t.name]):
            linear(in_proj_path(t.name, v), len(cols), h1)
    for layer in range(enc.depth):
        for t in g.node_types:
            for which in ("key", "query", "message"):
                for head in range(enc.heads):
                    linear(kqm_path(layer, t.name, which, head), h1, dh)
        for r in g.relations:
            for head in range(enc.heads):
                params[rel_path(layer, r.name, head, "w_att")] = ad.parameter(
                    _glorot(rng, dh, dh, dtype), dtype)
                params[rel_path(layer, r.name, head, "w_mes")] = ad.parameter(
                    _glorot(rng, dh, dh, dtype), dtype)
        for t in g.node_types:
            linear(out_path(layer, t.name), h1, h1)
    n_types, n_rels = len(g.node_types), len(g.relations)
    params[META_SCALE_PATH] = ad.parameter(
        np.ones((n_types, n_rels, n_types), dtype=dtype), dtype)

    linear(OUT_LINEAR_PATH, h1, h2)
    k_total = 1
    for t in g.node_types:
        k_total *= t.num_views
    params[VIEW_LOGITS_PATH] = ad.parameter(np.zeros(k_total, dtype=dtype), dtype)

    for t in g.node_types:
        path = attr_decoder_path(t.name)
        params[path + ".weight"] = ad.parameter(_glorot(rng, h2, t.attr_dim, dtype), dtype)
        params[path + ".bias"] = ad.parameter(
            np.zeros((t.num_nodes, t.attr_dim), dtype=dtype), dtype)
        linear(type_decoder_path(t.name), h2, n_types)
    params[TYPE_ATTENTION_PATH] = ad.parameter(np.ones(n_types, dtype=dtype), dtype)
    return params


# ---------------------------------------------------------------------------
# Forward pass over all view combinations
# ---------------------------------------------------------------------------

@dataclass
class PreparedData:
    """Constants reused across epochs: view slices, dense targets, index."""

    combos: list[ViewCombination]
    inputs: dict[tuple[str, int], np.ndarray]
    dense_adj: dict[str, np.ndarray]
    onehot: np.ndarray
    index: GlobalNodeIndex


def prepare(g: HetGraph, partition: ViewPartition, config: TrainConfig) -> PreparedData:
    index = global_index(g)
    dtype = config.dtype
    inputs = {}
    for t in g.node_types:
        for v in range(len(partition.columns[t.name])):
            inputs[t.name, v] = np.ascontiguousarray(
                view_slice(g, partition, t.name, v), dtype=dtype)
    dense_adj = {r.name: g.dense_adjacency(r.name) for r in g.declared_relations}
    return PreparedData(
        combos=enumerate_view_combinations(g),
        inputs=inputs,
        dense_adj=dense_adj,
        onehot=node_type_onehot(g, index),
        index=index,
    )


@dataclass
class ForwardResult:
    loss: Tensor
    loss_attribute: Tensor
    loss_structure: Tensor
    loss_nodetype: Tensor
    reconstruction: Reconstruction | None
    embeddings: EmbeddingSet | None

    def values(self) -> tuple[float, float, float, float]:
        return (self.loss.item(), self.loss_attribute.item(),
                self.loss_structure.item(), self.loss_nodetype.item())


def forward_loss(g: HetGraph, partition: ViewPartition, params: ModelParams,
                 config: TrainConfig, prepared: PreparedData | None = None,
                 capture: bool = True) -> ForwardResult:
    """Encoder over all K combinations, aggregation, decoders, total loss.

    ``capture=False`` skips the plain-array reconstruction/embedding
    snapshots (training only needs the loss tape)."""
    if prepared is None:
        prepared = prepare(g, partition, config)

    z_per_combo = []
    for combo in prepared.combos:
        inputs = {t.name: prepared.inputs[t.name, combo.view_of(t.name)]
                  for t in g.node_types}
        hidden = encode_combination(g, partition, combo, params, config.encoder,
                                    inputs=inputs)
        z_per_combo.append(out_project(hidden, params))
    weights = view_weights(params)
    z = aggregate(z_per_combo, weights)

    zero = ad.constant(np.asarray(0.0, dtype=config.dtype))
    adj_recon: dict = {}
    attr_recon: dict = {}
    ntype_recon = None
    l_s = l_a = l_t = zero
    if config.use_structure:
        adj_recon = reconstruct_structure(z, g)
        l_s = structure_loss(g, adj_recon, mode=config.loss,
                             dense_adj=prepared.dense_adj)
    if config.use_attribute:
        attr_recon = reconstruct_attributes(z, params, g)
        l_a = attribute_loss(g, attr_recon, mode=config.loss)
    if config.use_nodetype:
        ntype_recon = reconstruct_node_types(z, params, g)
        l_t = node_type_loss(prepared.onehot, ntype_recon, mode=config.loss)
    loss = total_loss(l_a, l_s, l_t)

    for name, term in (("attribute", l_a), ("structure", l_s), ("node-type", l_t)):
        if not np.isfinite(term.data):
            raise NumericalError(f"non-finite {name} loss")

    if not capture:
        return ForwardResult(loss, l_a, l_s, l_t, None, None)
    recon = Reconstruction(
        adj={k: v.data.copy() for k, v in adj_recon.items()},
        attrs={k: v.data.copy() for k, v in attr_recon.items()},
        node_types=ntype_recon.data.copy() if ntype_recon is not None else None,
    )
    embeddings = EmbeddingSet(
        per_combination=tuple({k: v.data.copy() for k, v in zc.items()}
                              for zc in z_per_combo),
        aggregated={k: v.data.copy() for k, v in z.items()},
    )
    return ForwardResult(loss, l_a, l_s, l_t, recon, embeddings)


# ---------------------------------------------------------------------------
# Optimizer and training loop
# ---------------------------------------------------------------------------

class Adam:
    """Bias-corrected moment updates with additive L2 weight decay."""

    def __init__(self, params: ModelParams, learning_rate: float,
                 weight_decay: float = 0.0, beta1: float = 0.9,
                 beta2: float = 0.999, epsilon: float = 1e-8):
        self.params = params
        self.lr = learning_rate
        self.weight_decay = weight_decay
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.t = 0
        self.m = {k: np.zeros_like(p.data) for k, p in params.items()}
        self.v = {k: np.zeros_like(p.data) for k, p in params.items()}

    def step(self) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for path, p in self.params.items():
            if p.grad is None:
                continue
            g = p.grad + self.weight_decay * p.data
            m = self.m[path]
            v = self.v[path]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p.data -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.epsilon)


@dataclass
class TrainResult:
    params: ModelParams
    trace: np.ndarray  # (epochs, 4): total, attribute, structure, node-type


def train_model(g: HetGraph, partition: ViewPartition, config: TrainConfig,
                log_every: int = 0) -> TrainResult:
    """Full-batch training for ``max_epochs``; deterministic per seed."""
    prepared = prepare(g, partition, config)
    params = init_params(g, partition, config)
    adam = Adam(params, config.learning_rate, config.weight_decay,
                config.beta1, config.beta2, config.epsilon)
    trace = np.zeros((config.max_epochs, 4))
    for epoch in range(config.max_epochs):
        try:
            result = forward_loss(g, partition, params, config,
                                  prepared=prepared, capture=False)
        except NumericalError as exc:
            raise NumericalError(f"epoch {epoch}: {exc}") from None
        trace[epoch] = result.values()
        ad.zero_grads(params.values())
        result.loss.backward()
        result = None  # drop the tape before the next epoch reallocates
        adam.step()
        for path, p in params.items():
            if not np.isfinite(p.data).all():
                raise NumericalError(f"epoch {epoch}: parameter {path} became "
                                     "non-finite after update")
        if log_every and (epoch % log_every == 0 or epoch == config.max_epochs - 1):
            print(f"epoch {epoch:4d}  loss {trace[epoch, 0]:.6f} "
                  f"(attr {trace[epoch, 1]:.6f} struct {trace[epoch, 2]:.6f} "
                  f"type {trace[epoch, 3]:.6f})")
    return TrainResult(params=params, trace=trace)


# ---------------------------------------------------------------------------
# Gradient verification
# ---------------------------------------------------------------------------

def grad_check(g: HetGraph, partition: ViewPartition, params: ModelParams,
               config: TrainConfig, sample_size: int = 200, seed: int = 0,
               step: float = 1e-6) -> float:
    """Max relative error between tape gradients and central differences.

    Relative error per sampled scalar is |ga - gfd| / max(1, |ga|, |gfd|).
    """
    if config.precision != 64:
        raise DataError("grad_check requires 64-bit precision")
    prepared = prepare(g, partition, config)
    ad.zero_grads(params.values())
    result = forward_loss(g, partition, params, config, prepared=prepared)
    result.loss.backward()

    paths = list(params)
    sizes = np.array([params[p].data.size for p in paths])
    total = int(sizes.sum())
    rng = np.random.default_rng(seed)
    chosen = rng.choice(total, size=min(sample_size, total), replace=False)
    bounds = np.cumsum(sizes)

    worst = 0.0
    for flat in np.sort(chosen):
        which = int(np.searchsorted(bounds, flat, side="right"))
        offset = int(flat - (bounds[which - 1] if which else 0))
        p = params[paths[which]]
        orig = p.data.flat[offset]
        p.data.flat[offset] = orig + step
        lp = forward_loss(g, partition, params, config, prepared=prepared).loss.item()
        p.data.flat[offset] = orig - step
        lm = forward_loss(g, partition, params, config, prepared=prepared).loss.item()
        p.data.flat[offset] = orig
        g_fd = (lp - lm) / (2.0 * step)
        g_an = 0.0 if p.grad is None else float(p.grad.flat[offset])
        err = abs(g_an - g_fd) / max(1.0, abs(g_an), abs(g_fd))
        worst = max(worst, err)
    return worst


def gradcheck_fixture(seed: int = 0) -> tuple[HetGraph, ViewPartition, TrainConfig]:
    """Tiny two-type graph for gradient checking.

    Every node has at least one incoming edge so no relu sees an exactly
    zero pre-activation (the residual-path kink the finite-difference
    probe would otherwise straddle).
    """
    rng = np.random.default_rng(seed)
    na, nb = 6, 5
    specs = [NodeTypeSpec("ta", na, (3, 3)), NodeTypeSpec("tb", nb, (2, 2))]
    attrs = {
        "ta": np.maximum(rng.normal(0.4, 0.8, size=(na, 6)), 0.0),
        "tb": np.maximum(rng.normal(0.4, 0.8, size=(nb, 4)), 0.0),
    }
    edges = {(i, i % nb) for i in range(na)}
    extra = rng.random((na, nb)) < 0.3
    edges |= {(int(i), int(j)) for i, j in zip(*np.nonzero(extra))}
    g = build_graph(specs, [RelationSpec("links", "ta", "tb")], attrs,
                    {"links": sorted(edges)})
    config = TrainConfig(
        seed=seed,
        encoder=EncoderConfig(hidden_dim=8, out_dim=4, heads=2, depth=2),
    )
    return g, partition_of(g), config


# ---------------------------------------------------------------------------
# Model persistence
# ---------------------------------------------------------------------------

def encoder_config_to_dict(enc: EncoderConfig) -> dict:
    return {"hidden_dim": enc.hidden_dim, "out_dim": enc.out_dim,
            "heads": enc.heads, "depth": enc.depth, "attn_scale": enc.attn_scale}


def train_config_to_dict(cfg: TrainConfig) -> dict:
    return {
        "learning_rate": cfg.learning_rate,
        "weight_decay": cfg.weight_decay,
        "max_epochs": cfg.max_epochs,
        "seed": cfg.seed,
        "beta1": cfg.beta1,
        "beta2": cfg.beta2,
        "epsilon": cfg.epsilon,
        "precision": cfg.precision,
        "loss": cfg.loss,
        "encoder": encoder_config_to_dict(cfg.encoder),
        "use_structure": cfg.use_structure,
        "use_attribute": cfg.use_attribute,
        "use_nodetype": cfg.use_nodetype,
    }


def train_config_from_dict(d: Mapping) -> TrainConfig:
    enc = d.get("encoder", {})
    return TrainConfig(
        learning_rate=float(d["learning_rate"]),
        weight_decay=float(d["weight_decay"]),
        max_epochs=int(d["max_epochs"]),
        seed=int(d["seed"]),
        beta1=float(d["beta1"]),
        beta2=float(d["beta2"]),
        epsilon=float(d["epsilon"]),
        precision=int(d["precision"]),
        loss=str(d["loss"]),
        encoder=EncoderConfig(
            hidden_dim=int(enc["hidden_dim"]), out_dim=int(enc["out_dim"]),
            heads=int(enc["heads"]), depth=int(enc["depth"]),
            attn_scale=str(enc["attn_scale"])),
        use_structure=bool(d["use_structure"]),
        use_attribute=bool(d["use_attribute"]),
        use_nodetype=bool(d["use_nodetype"]),
    )


def schema_fingerprint(g: HetGraph, partition: ViewPartition) -> str:
    """Hash of everything the model's shapes depend on."""
    payload = {
        "node_types": [{"name": t.name, "num_nodes": t.num_nodes,
                        "view_dims": list(t.view_dims)} for t in g.node_types],
        "relations": [{"name": r.name, "src_type": r.src_type,
                       "dst_type": r.dst_type} for r in g.declared_relations],
        "view_columns": {k: [list(v) for v in partition.columns[k]]
                         for k in sorted(partition.columns)},
    }
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


def save_model(params: ModelParams, config: TrainConfig, schema_hash: str,
               path) -> None:
    header = {
        "format_version": MODEL_VERSION,
        "config": train_config_to_dict(config),
        "schema_hash": schema_hash,
        "arrays": [{"path": k, "shape": list(p.data.shape)}
                   for k, p in params.items()],
    }
    blob = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<I", MODEL_VERSION))
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for p in params.values():
            fh.write(np.ascontiguousarray(p.data, dtype="<f8").tobytes())


@dataclass
class LoadedModel:
    params: ModelParams
    config: TrainConfig
    schema_hash: str


def load_model(path) -> LoadedModel:
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path}: file missing")
    raw = path.read_bytes()
    if raw[:8] != MODEL_MAGIC:
        raise DataError(f"{path}: not a model file (bad magic)")
    version = struct.unpack("<I", raw[8:12])[0]
    if version != MODEL_VERSION:
        raise DataError(f"{path}: unsupported model format version {version} "
                        f"(expected {MODEL_VERSION})")
    hlen = struct.unpack("<Q", raw[12:20])[0]
    try:
        header = json.loads(raw[20:20 + hlen].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataError(f"{path}: corrupt header ({exc})") from None
    config = train_config_from_dict(header["config"])
    dtype = config.dtype
    params: ModelParams = {}
    cursor = 20 + hlen
    for entry in header["arrays"]:
        shape = tuple(int(s) for s in entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        end = cursor + 8 * count
        if end > len(raw):
            raise DataError(f"{path}: truncated array data for {entry['path']}")
        values = np.frombuffer(raw[cursor:end], dtype="<f8").reshape(shape)
        params[entry["path"]] = ad.parameter(values.astype(dtype), dtype)
        cursor = end
    if cursor != len(raw):
        raise DataError(f"{path}: trailing bytes after array data")
    return LoadedModel(params=params, config=config,
                       schema_hash=header["schema_hash"])
