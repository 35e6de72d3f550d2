"""Heterogeneous graph data model, validation, global ordering and bundle IO.

A graph holds typed node sets with per-type attribute matrices and
per-relation edge lists. Every declared relation gets an automatically
generated reverse relation (suffix ``__rev``) so that message passing can
reach both endpoint types; reverse relations are never serialized and are
regenerated on load. The on-disk bundle format is documented in the README:

    schema.json            node types (name, num_nodes, view_dims,
                           optional view_columns) and declared relations
    attrs/<type>.csv       num_nodes rows x attr_dim columns, "%.17g" text
    edges/<relation>.csv   one "src,dst" pair per line, 0-based local ids
    labels.csv             optional; header then "type,local,is_anomaly,kind"
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError

REVERSE_SUFFIX = "__rev"

# Per-node anomaly label codes.
LABEL_NONE = 0
LABEL_ATTRIBUTE = 1
LABEL_STRUCTURAL = 2

KIND_NAMES = {LABEL_NONE: "none", LABEL_ATTRIBUTE: "attr", LABEL_STRUCTURAL: "struct"}
KIND_CODES = {v: k for k, v in KIND_NAMES.items()}


@dataclass(frozen=True)
class NodeTypeSpec:
    """One node type: its population and attribute/view dimensions."""

    name: str
    num_nodes: int
    view_dims: tuple[int, ...]

    @property
    def attr_dim(self) -> int:
        return sum(self.view_dims)

    @property
    def num_views(self) -> int:
        return len(self.view_dims)


@dataclass(frozen=True)
class RelationSpec:
    """One edge type; ``reversed_of`` is set on auto-generated reverses."""

    name: str
    src_type: str
    dst_type: str
    reversed_of: str | None = None

    @property
    def is_reverse(self) -> bool:
        return self.reversed_of is not None


@dataclass(frozen=True)
class GlobalNodeIndex:
    """Bijection between (type, local index) and a single global ordering.

    Nodes are blocked by type in declaration order, locals ascending.
    """

    type_names: tuple[str, ...]
    counts: tuple[int, ...]
    offsets: dict[str, int] = field(repr=False)
    total: int = 0

    def global_of(self, type_name: str, local: int) -> int:
        return self.offsets[type_name] + local

    def local_of(self, global_index: int) -> tuple[str, int]:
        if not 0 <= global_index < self.total:
            raise DataError(f"global index {global_index} out of range [0, {self.total})")
        for name, count in zip(self.type_names, self.counts):
            off = self.offsets[name]
            if global_index < off + count:
                return name, global_index - off
        raise DataError(f"global index {global_index} unmapped")  # pragma: no cover

    def slice_of(self, type_name: str) -> slice:
        off = self.offsets[type_name]
        i = self.type_names.index(type_name)
        return slice(off, off + self.counts[i])


class HetGraph:
    """Immutable typed graph: specs, attributes, edges, optional labels.

    ``relations`` lists declared relations first, then their reverses in
    the same order. ``edges[r]`` is an int64 array of shape (E, 2) holding
    (src local, dst local) pairs. ``labels`` is either None (absent) or a
    per-type int8 code array (LABEL_* constants). ``view_columns`` records
    a persisted view partition (per type, one column-index tuple per view).
    """

    def __init__(self, node_types, relations, attrs, edges, labels=None,
                 view_columns=None):
        self.node_types: tuple[NodeTypeSpec, ...] = tuple(node_types)
        self.relations: tuple[RelationSpec, ...] = tuple(relations)
        self.attrs: dict[str, np.ndarray] = {
            k: _freeze(np.asarray(v, dtype=np.float64)) for k, v in attrs.items()
        }
        self.edges: dict[str, np.ndarray] = {
            k: _freeze(_as_edge_array(v)) for k, v in edges.items()
        }
        self.labels: dict[str, np.ndarray] | None = None
        if labels is not None:
            self.labels = {k: _freeze(np.asarray(v, dtype=np.int8)) for k, v in labels.items()}
        self.view_columns: dict[str, tuple[tuple[int, ...], ...]] | None = None
        if view_columns is not None:
            self.view_columns = {
                k: tuple(tuple(int(c) for c in cols) for cols in v)
                for k, v in view_columns.items()
            }
        self._types_by_name = {t.name: t for t in self.node_types}
        self._relations_by_name = {r.name: r for r in self.relations}

    # -- lookups ---------------------------------------------------------
    def node_type(self, name: str) -> NodeTypeSpec:
        try:
            return self._types_by_name[name]
        except KeyError:
            raise DataError(f"unknown node type: {name!r}") from None

    def relation(self, name: str) -> RelationSpec:
        try:
            return self._relations_by_name[name]
        except KeyError:
            raise DataError(f"unknown relation: {name!r}") from None

    def has_node_type(self, name: str) -> bool:
        return name in self._types_by_name

    @property
    def type_names(self) -> tuple[str, ...]:
        return tuple(t.name for t in self.node_types)

    @property
    def declared_relations(self) -> tuple[RelationSpec, ...]:
        return tuple(r for r in self.relations if not r.is_reverse)

    @property
    def num_nodes_total(self) -> int:
        return sum(t.num_nodes for t in self.node_types)

    def dense_adjacency(self, relation_name: str) -> np.ndarray:
        """Densify one relation's binary adjacency (desk-scale only)."""
        rel = self.relation(relation_name)
        a = np.zeros((self.node_type(rel.src_type).num_nodes,
                      self.node_type(rel.dst_type).num_nodes), dtype=np.float64)
        e = self.edges[relation_name]
        if len(e):
            a[e[:, 0], e[:, 1]] = 1.0
        return a

    def label_codes(self, type_name: str) -> np.ndarray:
        """Per-node label codes for one type (zeros if labels absent)."""
        if self.labels is None:
            return np.zeros(self.node_type(type_name).num_nodes, dtype=np.int8)
        return self.labels[type_name]

    def replace(self, **kwargs) -> "HetGraph":
        """Copy with some components swapped out (attrs, edges, labels, ...)."""
        parts = dict(
            node_types=self.node_types,
            relations=self.relations,
            attrs=self.attrs,
            edges=self.edges,
            labels=self.labels,
            view_columns=self.view_columns,
        )
        parts.update(kwargs)
        return HetGraph(**parts)

    def __eq__(self, other) -> bool:
        if not isinstance(other, HetGraph):
            return NotImplemented
        if self.node_types != other.node_types or self.relations != other.relations:
            return False
        if self.view_columns != other.view_columns:
            return False
        for k in self.attrs:
            if not np.array_equal(self.attrs[k], other.attrs.get(k)):
                return False
        for k in self.edges:
            if not np.array_equal(self.edges[k], other.edges.get(k)):
                return False
        if (self.labels is None) != (other.labels is None):
            return False
        if self.labels is not None:
            for k in self.labels:
                if not np.array_equal(self.labels[k], other.labels.get(k)):
                    return False
        return True

    __hash__ = None  # mutable-array payload; identity hashing would mislead


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def _as_edge_array(v) -> np.ndarray:
    e = np.asarray(v, dtype=np.int64)
    if e.size == 0:
        return e.reshape(0, 2)
    return e.reshape(-1, 2)


def reverse_name(name: str) -> str:
    return name + REVERSE_SUFFIX


def build_graph(node_types, relations, attrs, edges, labels=None,
                view_columns=None) -> HetGraph:
    """Assemble a graph from declared relations, adding reverses.

    ``relations`` and ``edges`` name only declared relations; a reverse
    relation with flipped edges is appended for each.
    """
    declared = tuple(relations)
    full = list(declared)
    all_edges = {r.name: _as_edge_array(edges.get(r.name, ())) for r in declared}
    for r in declared:
        rname = reverse_name(r.name)
        full.append(RelationSpec(rname, r.dst_type, r.src_type, reversed_of=r.name))
        all_edges[rname] = all_edges[r.name][:, ::-1].copy()
    return HetGraph(node_types, full, attrs, all_edges, labels=labels,
                    view_columns=view_columns)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def validate_graph(g: HetGraph) -> list[str]:
    """Check every structural invariant; return human-readable violations."""
    problems: list[str] = []
    names = [t.name for t in g.node_types]
    if len(set(names)) != len(names):
        problems.append("node type names not unique")
    for t in g.node_types:
        if t.num_nodes < 1:
            problems.append(f"node type {t.name}: num_nodes must be >= 1")
        if not t.view_dims or any(d < 1 for d in t.view_dims):
            problems.append(f"node type {t.name}: every view dim must be >= 1")
        a = g.attrs.get(t.name)
        if a is None:
            problems.append(f"node type {t.name}: attribute matrix missing")
            continue
        if a.shape != (t.num_nodes, t.attr_dim):
            problems.append(
                f"node type {t.name}: attrs shape {a.shape} != "
                f"({t.num_nodes}, {t.attr_dim})")
        elif not np.isfinite(a).all():
            problems.append(f"node type {t.name}: attrs contain NaN/Inf")

    rel_names = [r.name for r in g.relations]
    if len(set(rel_names)) != len(rel_names):
        problems.append("relation names not unique")
    declared = {r.name for r in g.relations if not r.is_reverse}
    for r in g.relations:
        if r.src_type not in g.type_names or r.dst_type not in g.type_names:
            problems.append(f"relation {r.name}: endpoint type not declared")
            continue
        e = g.edges.get(r.name)
        if e is None:
            problems.append(f"relation {r.name}: edge array missing")
            continue
        n_src = g.node_type(r.src_type).num_nodes
        n_dst = g.node_type(r.dst_type).num_nodes
        if len(e) and (e[:, 0].min() < 0 or e[:, 0].max() >= n_src
                       or e[:, 1].min() < 0 or e[:, 1].max() >= n_dst):
            problems.append(f"relation {r.name}: edge index out of range")
        elif len(e) != len(np.unique(e[:, 0].astype(np.int64) * n_dst + e[:, 1])):
            problems.append(f"relation {r.name}: duplicate edges")
        if r.is_reverse and r.reversed_of not in declared:
            problems.append(f"relation {r.name}: reversed_of names unknown relation")
    for r in g.relations:
        if r.is_reverse or r.name not in g.edges:
            continue
        rname = reverse_name(r.name)
        if rname not in g.edges or rname not in {x.name for x in g.relations}:
            problems.append(f"relation {r.name}: reverse relation missing")
            continue
        fwd = g.edges[r.name]
        rev = g.edges[rname]
        if not _same_edge_set(fwd[:, ::-1], rev):
            problems.append(f"relation {r.name}: reverse relation mismatch "
                            "(edge sets are not transposes)")

    if g.labels is not None:
        for t in g.node_types:
            lab = g.labels.get(t.name)
            if lab is None:
                problems.append(f"labels missing for type {t.name}")
            elif lab.shape != (t.num_nodes,):
                problems.append(f"labels for type {t.name}: wrong length")
            elif not np.isin(lab, list(KIND_NAMES)).all():
                problems.append(f"labels for type {t.name}: unknown label code")

    if g.view_columns is not None:
        for t in g.node_types:
            cols = g.view_columns.get(t.name)
            if cols is None:
                problems.append(f"view_columns missing for type {t.name}")
                continue
            flat = [c for view in cols for c in view]
            if sorted(flat) != list(range(t.attr_dim)):
                problems.append(f"view_columns for type {t.name}: not a partition "
                                f"of 0..{t.attr_dim - 1}")
            if tuple(len(v) for v in cols) != t.view_dims:
                problems.append(f"view_columns for type {t.name}: sizes disagree "
                                "with view_dims")
    return problems


def _same_edge_set(a: np.ndarray, b: np.ndarray) -> bool:
    if a.shape != b.shape:
        return False
    if len(a) == 0:
        return True
    key = max(int(a.max()), int(b.max())) + 1
    return np.array_equal(np.sort(a[:, 0] * key + a[:, 1]),
                          np.sort(b[:, 0] * key + b[:, 1]))


def global_index(g: HetGraph) -> GlobalNodeIndex:
    """Stable (type, local) <-> global bijection for a valid graph."""
    problems = validate_graph(g)
    if problems:
        raise DataError("invalid graph: " + "; ".join(problems))
    offsets: dict[str, int] = {}
    total = 0
    for t in g.node_types:
        offsets[t.name] = total
        total += t.num_nodes
    return GlobalNodeIndex(
        type_names=g.type_names,
        counts=tuple(t.num_nodes for t in g.node_types),
        offsets=offsets,
        total=total,
    )


# ---------------------------------------------------------------------------
# Bundle serialization
# ---------------------------------------------------------------------------

def save_bundle(g: HetGraph, path) -> None:
    """Write the on-disk bundle; attribute text round-trips bit-exactly."""
    root = Path(path)
    (root / "attrs").mkdir(parents=True, exist_ok=True)
    (root / "edges").mkdir(parents=True, exist_ok=True)

    schema = {"node_types": [], "relations": []}
    for t in g.node_types:
        entry = {"name": t.name, "num_nodes": t.num_nodes,
                 "view_dims": list(t.view_dims)}
        if g.view_columns is not None:
            entry["view_columns"] = [list(v) for v in g.view_columns[t.name]]
        schema["node_types"].append(entry)
    for r in g.declared_relations:
        schema["relations"].append(
            {"name": r.name, "src_type": r.src_type, "dst_type": r.dst_type})
    (root / "schema.json").write_text(json.dumps(schema, indent=2) + "\n")

    for t in g.node_types:
        _write_matrix(root / "attrs" / f"{t.name}.csv", g.attrs[t.name])
    for r in g.declared_relations:
        e = g.edges[r.name]
        lines = [f"{int(s)},{int(d)}" for s, d in e]
        (root / "edges" / f"{r.name}.csv").write_text("\n".join(lines) + ("\n" if lines else ""))

    if g.labels is not None:
        lines = ["type,local_index,is_anomaly,kind"]
        for t in g.node_types:
            codes = g.labels[t.name]
            for i, c in enumerate(codes):
                lines.append(f"{t.name},{i},{int(c != LABEL_NONE)},{KIND_NAMES[int(c)]}")
        (root / "labels.csv").write_text("\n".join(lines) + "\n")


def _write_matrix(path: Path, a: np.ndarray) -> None:
    with open(path, "w") as fh:
        for row in a:
            fh.write(",".join(f"{x:.17g}" for x in row))
            fh.write("\n")


def _read_matrix(path: Path, shape: tuple[int, int]) -> np.ndarray:
    if not path.exists():
        raise DataError(f"{path}: file missing")
    try:
        a = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    except ValueError:
        _locate_bad_row(path, shape[1])
        raise  # pragma: no cover - _locate_bad_row always raises first
    if shape[0] == 0 and a.size == 0:
        a = a.reshape(shape)
    if a.shape != shape:
        if a.shape[0] != shape[0]:
            raise DataError(f"{path}: expected {shape[0]} rows, found {a.shape[0]}")
        raise DataError(f"{path}: expected {shape[1]} columns, found {a.shape[1]}")
    return a


def _locate_bad_row(path: Path, ncols: int) -> None:
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            cells = line.rstrip("\n").split(",")
            try:
                [float(c) for c in cells]
            except ValueError:
                raise DataError(f"{path}:{lineno}: malformed value") from None
            if len(cells) != ncols:
                raise DataError(
                    f"{path}:{lineno}: expected {ncols} columns, found {len(cells)}")
    raise DataError(f"{path}: malformed matrix")


def load_bundle(path) -> HetGraph:
    """Load and validate a bundle directory; reverse relations regenerated."""
    root = Path(path)
    schema_path = root / "schema.json"
    if not schema_path.exists():
        raise DataError(f"{schema_path}: file missing")
    try:
        schema = json.loads(schema_path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{schema_path}:{exc.lineno}: invalid JSON ({exc.msg})") from None

    node_types = []
    view_columns: dict[str, tuple[tuple[int, ...], ...]] = {}
    have_columns = False
    for entry in schema.get("node_types", []):
        try:
            spec = NodeTypeSpec(entry["name"], int(entry["num_nodes"]),
                                tuple(int(d) for d in entry["view_dims"]))
        except (KeyError, TypeError) as exc:
            raise DataError(f"{schema_path}: bad node_types entry ({exc})") from None
        node_types.append(spec)
        if "view_columns" in entry:
            have_columns = True
            view_columns[spec.name] = tuple(
                tuple(int(c) for c in view) for view in entry["view_columns"])
    relations = []
    for entry in schema.get("relations", []):
        try:
            relations.append(RelationSpec(entry["name"], entry["src_type"],
                                          entry["dst_type"]))
        except KeyError as exc:
            raise DataError(f"{schema_path}: bad relations entry ({exc})") from None

    attrs = {}
    for t in node_types:
        attrs[t.name] = _read_matrix(root / "attrs" / f"{t.name}.csv",
                                     (t.num_nodes, t.attr_dim))
    edges = {}
    for r in relations:
        edges[r.name] = _read_edges(root / "edges" / f"{r.name}.csv")

    labels = None
    labels_path = root / "labels.csv"
    if labels_path.exists():
        labels = _read_labels(labels_path, node_types)

    g = build_graph(node_types, relations, attrs, edges, labels=labels,
                    view_columns=view_columns if have_columns else None)
    problems = validate_graph(g)
    if problems:
        raise DataError(f"{root}: invalid bundle: " + "; ".join(problems))
    return g


def _read_edges(path: Path) -> np.ndarray:
    if not path.exists():
        raise DataError(f"{path}: file missing")
    pairs = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            if len(cells) != 2:
                raise DataError(f"{path}:{lineno}: expected 'src,dst'")
            try:
                pairs.append((int(cells[0]), int(cells[1])))
            except ValueError:
                raise DataError(f"{path}:{lineno}: malformed edge indices") from None
    return _as_edge_array(pairs)


def _read_labels(path: Path, node_types) -> dict[str, np.ndarray]:
    counts = {t.name: t.num_nodes for t in node_types}
    labels = {name: np.zeros(n, dtype=np.int8) for name, n in counts.items()}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or (lineno == 1 and line.startswith("type,")):
                continue
            cells = line.split(",")
            if len(cells) != 4:
                raise DataError(f"{path}:{lineno}: expected 4 fields")
            tname, idx_s, flag_s, kind = cells
            if tname not in counts:
                raise DataError(f"{path}:{lineno}: unknown node type {tname!r}")
            try:
                idx = int(idx_s)
                flag = int(flag_s)
            except ValueError:
                raise DataError(f"{path}:{lineno}: malformed row") from None
            if not 0 <= idx < counts[tname]:
                raise DataError(f"{path}:{lineno}: node index out of range")
            if kind not in KIND_CODES:
                raise DataError(f"{path}:{lineno}: unknown kind {kind!r}")
            code = KIND_CODES[kind]
            if flag != int(code != LABEL_NONE):
                raise DataError(f"{path}:{lineno}: is_anomaly flag disagrees with kind")
            labels[tname][idx] = code
    return labels
