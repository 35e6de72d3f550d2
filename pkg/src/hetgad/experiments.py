"""Experiment harness: full pipeline runs, decoder ablations, grid sweeps
over score weights / depth / learning rate, and the injected-count
robustness study. Each run is deterministic per seed; metrics land in a
fixed-schema JSON, grids additionally in CSV and (best-effort) plots.
"""

from __future__ import annotations

import json
import time
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .decode import ScoreReport, ScoreWeights, anomaly_score, write_scores_csv
from .encoder import EncoderConfig
from .errors import DataError, HetgadError
from .graph import HetGraph, global_index, load_bundle
from .inject import InjectionConfig, inject_anomalies
from .metrics import auc, auc_by_kind
from .train import (TrainConfig, forward_loss, prepare, train_config_to_dict,
                    train_model)
from .views import partition_of

ABLATION_VARIANTS = ("full", "no_structure", "no_attribute", "no_nodetype")


@dataclass
class MetricsReport:
    auc: float
    auc_by_kind: dict[str, float | None]
    n_by_kind: dict[str, int]
    n_anomalies: int
    n_nodes: int
    seed: int
    config: dict
    wall_seconds: float

    def to_json_dict(self) -> dict:
        """The fixed metrics.json schema (exactly these seven keys)."""
        return {
            "auc": self.auc,
            "auc_by_kind": self.auc_by_kind,
            "n_anomalies": self.n_anomalies,
            "n_nodes": self.n_nodes,
            "seed": self.seed,
            "config": self.config,
            "wall_seconds": self.wall_seconds,
        }


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str  # ablation | robustness | lambda_sweep | depth_sweep | lr_sweep
    grid: tuple
    seeds: tuple[int, ...]
    data: object  # bundle path or HetGraph

    def __post_init__(self):
        if not self.grid or not self.seeds:
            raise DataError("experiment grid and seeds must be non-empty")


@dataclass(frozen=True)
class PipelineConfig:
    train: TrainConfig = field(default_factory=TrainConfig)
    weights: ScoreWeights = field(default_factory=ScoreWeights)
    out_dir: Path | None = None


def _as_graph(data) -> HetGraph:
    if isinstance(data, HetGraph):
        return data
    return load_bundle(data)


def label_arrays(g: HetGraph) -> tuple[np.ndarray, np.ndarray]:
    """(is_anomaly, kind codes) stacked in global index order."""
    if g.labels is None:
        raise DataError("bundle has no labels")
    index = global_index(g)
    codes = np.zeros(index.total, dtype=np.int8)
    for t in g.node_types:
        codes[index.slice_of(t.name)] = g.labels[t.name]
    return codes != 0, codes


def run_pipeline(data, config: PipelineConfig) -> tuple[ScoreReport, MetricsReport]:
    """Train, score and evaluate one labeled bundle; write artifacts."""
    start = time.perf_counter()
    g = _as_graph(data)
    flags, codes = label_arrays(g)

    try:
        partition = partition_of(g)
        result = train_model(g, partition, config.train)
    except HetgadError as exc:
        raise type(exc)(f"train: {exc}") from None
    try:
        prepared = prepare(g, partition, config.train)
        forward = forward_loss(g, partition, result.params, config.train,
                               prepared=prepared)
        report = anomaly_score(g, forward.reconstruction, config.weights,
                               index=prepared.index, dense_adj=prepared.dense_adj)
    except HetgadError as exc:
        raise type(exc)(f"score: {exc}") from None
    try:
        overall = auc(report.score, flags)
    except HetgadError as exc:
        raise type(exc)(f"eval: {exc}") from None

    metrics = MetricsReport(
        auc=overall,
        auc_by_kind=auc_by_kind(report.score, codes),
        n_by_kind=_counts_by_kind(codes),
        n_anomalies=int(flags.sum()),
        n_nodes=int(len(flags)),
        seed=config.train.seed,
        config={"train": train_config_to_dict(config.train),
                "weights": {"lambda1": config.weights.structure,
                            "lambda2": config.weights.attribute}},
        wall_seconds=time.perf_counter() - start,
    )
    if config.out_dir is not None:
        out = Path(config.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_scores_csv(report, out / "scores.csv")
        (out / "metrics.json").write_text(
            json.dumps(metrics.to_json_dict(), indent=2) + "\n")
    return report, metrics


def _counts_by_kind(codes: np.ndarray) -> dict[str, int]:
    from .graph import KIND_NAMES, LABEL_NONE

    return {name: int((codes == code).sum())
            for code, name in KIND_NAMES.items() if code != LABEL_NONE}


def random_score_auc(g: HetGraph, seeds) -> list[float]:
    """Control: AUC of seeded uniform-noise scores against the labels."""
    flags, _ = label_arrays(g)
    out = []
    for seed in seeds:
        noise = np.random.default_rng(seed).random(len(flags))
        out.append(auc(noise, flags))
    return out


# ---------------------------------------------------------------------------
# Ablation
# ---------------------------------------------------------------------------

def _variant_config(base: PipelineConfig, variant: str, seed: int) -> PipelineConfig:
    train = replace(base.train, seed=seed)
    if variant == "full":
        return replace(base, train=train, out_dir=None)
    term, flag = {
        "no_structure": ("structure", "use_structure"),
        "no_attribute": ("attribute", "use_attribute"),
        "no_nodetype": ("node_type", "use_nodetype"),
    }[variant]
    train = replace(train, **{flag: False})
    w = base.weights.drop(term)
    return replace(base, train=train, out_dir=None,
                   weights=ScoreWeights(w[0], w[1]))


def run_ablation(spec: ExperimentSpec, base: PipelineConfig | None = None,
                 out_dir=None) -> dict[str, list[MetricsReport]]:
    """Train full and single-decoder-removed variants on one bundle.

    Removing a decoder drops both its loss term and its score term (the
    remaining score weights are renormalized proportionally).
    """
    if spec.kind != "ablation":
        raise DataError(f"expected an ablation spec, got kind {spec.kind!r}")
    base = base or PipelineConfig()
    g = _as_graph(spec.data)
    results: dict[str, list[MetricsReport]] = {v: [] for v in ABLATION_VARIANTS}
    for variant in ABLATION_VARIANTS:
        for seed in spec.seeds:
            _, metrics = run_pipeline(g, _variant_config(base, variant, seed))
            results[variant].append(metrics)

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        lines = ["variant,seed,auc"]
        for variant, reports in results.items():
            for r in reports:
                lines.append(f"{variant},{r.seed},{r.auc:.17g}")
        (out / "ablation.csv").write_text("\n".join(lines) + "\n")
        summary = {v: float(np.mean([r.auc for r in rs]))
                   for v, rs in results.items()}
        (out / "ablation_summary.json").write_text(json.dumps(summary, indent=2) + "\n")
        _emit_plot(_bar_plot, out / "ablation.svg", summary)
    return results


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

@dataclass
class SweepCell:
    point: object
    status: str  # "ok" or "skipped"
    reason: str = ""
    reports: list[MetricsReport] = field(default_factory=list)

    @property
    def mean_auc(self) -> float | None:
        if not self.reports:
            return None
        return float(np.mean([r.auc for r in self.reports]))


def _sweep_config(kind: str, point, base: PipelineConfig) -> PipelineConfig:
    if kind == "lambda_sweep":
        l1, l2 = point
        if l1 + l2 > 1.0 + 1e-12 or min(l1, l2) < 0.0:
            raise DataError(f"lambda pair {point} violates the simplex constraint")
        return replace(base, weights=ScoreWeights(l1, l2))
    if kind == "depth_sweep":
        depth = int(point)
        if depth < 1:
            raise DataError(f"depth {depth} must be >= 1")
        enc = base.train.encoder
        return replace(base, train=replace(
            base.train, encoder=EncoderConfig(
                hidden_dim=enc.hidden_dim, out_dim=enc.out_dim, heads=enc.heads,
                depth=depth, attn_scale=enc.attn_scale)))
    if kind == "lr_sweep":
        lr = float(point)
        if lr <= 0.0:
            raise DataError(f"learning rate {lr} must be > 0")
        return replace(base, train=replace(base.train, learning_rate=lr))
    raise DataError(f"unknown sweep kind: {kind!r}")


def run_sweep(spec: ExperimentSpec, base: PipelineConfig | None = None,
              out_dir=None) -> list[SweepCell]:
    """One pipeline run per (grid point, seed); infeasible points skipped."""
    if spec.kind not in ("lambda_sweep", "depth_sweep", "lr_sweep"):
        raise DataError(f"unknown sweep kind: {spec.kind!r}")
    base = base or PipelineConfig()
    g = _as_graph(spec.data)
    cells: list[SweepCell] = []
    for point in spec.grid:
        try:
            cfg = _sweep_config(spec.kind, point, base)
        except DataError as exc:
            warnings.warn(f"skipping grid point {point}: {exc}")
            cells.append(SweepCell(point=point, status="skipped", reason=str(exc)))
            continue
        cell = SweepCell(point=point, status="ok")
        for seed in spec.seeds:
            _, metrics = run_pipeline(
                g, replace(cfg, train=replace(cfg.train, seed=seed), out_dir=None))
            cell.reports.append(metrics)
        cells.append(cell)
    if out_dir is not None:
        _write_sweep_outputs(spec.kind, cells, out_dir)
    return cells


def _write_sweep_outputs(kind: str, cells: list[SweepCell], out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = ["point,status,seed,auc,note"]
    for cell in cells:
        if cell.status == "skipped":
            lines.append(f"\"{cell.point}\",skipped,,,\"{cell.reason}\"")
            continue
        for r in cell.reports:
            lines.append(f"\"{cell.point}\",ok,{r.seed},{r.auc:.17g},")
    (out / f"{kind}.csv").write_text("\n".join(lines) + "\n")
    series = {str(c.point): c.mean_auc for c in cells if c.status == "ok"}
    _emit_plot(_line_plot, out / f"{kind}.svg", series)


# ---------------------------------------------------------------------------
# Robustness (injected anomaly counts)
# ---------------------------------------------------------------------------

def run_robustness(base_graph, inject_cfg: InjectionConfig, factors, seeds,
                   base: PipelineConfig | None = None, out_dir=None
                   ) -> dict[int, list[MetricsReport]]:
    """Scale injected-anomaly counts by each factor, re-inject and rerun."""
    base = base or PipelineConfig()
    g0 = _as_graph(base_graph)
    results: dict[int, list[MetricsReport]] = {}
    for factor in factors:
        scaled = inject_cfg.scaled(int(factor))
        results[int(factor)] = []
        for seed in seeds:
            injected, _ = inject_anomalies(
                g0, replace(scaled, seed=scaled.seed + seed))
            cfg = replace(base, train=replace(base.train, seed=seed), out_dir=None)
            _, metrics = run_pipeline(injected, cfg)
            results[int(factor)].append(metrics)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        lines = ["factor,seed,auc"]
        for factor, reports in results.items():
            for r in reports:
                lines.append(f"{factor},{r.seed},{r.auc:.17g}")
        (out / "robustness.csv").write_text("\n".join(lines) + "\n")
        series = {str(f): float(np.mean([r.auc for r in rs]))
                  for f, rs in results.items()}
        _emit_plot(_line_plot, out / "robustness.svg", series)
    return results


# ---------------------------------------------------------------------------
# Plot emission (never fails the run)
# ---------------------------------------------------------------------------

def _emit_plot(plot_fn, path, series) -> None:
    try:
        plot_fn(path, series)
    except Exception as exc:  # plotting is best-effort by contract
        warnings.warn(f"plot emission failed for {path}: {exc}")


def _bar_plot(path, series: dict[str, float]) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axis = plt.subplots(figsize=(6, 4))
    names = list(series)
    axis.bar(names, [series[n] for n in names], color="#4878cf")
    axis.set_ylabel("mean AUC")
    axis.set_ylim(0.0, 1.0)
    axis.tick_params(axis="x", rotation=20)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def _line_plot(path, series: dict[str, float]) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axis = plt.subplots(figsize=(6, 4))
    names = list(series)
    axis.plot(names, [series[n] for n in names], marker="o")
    axis.set_ylabel("mean AUC")
    axis.set_xlabel("grid point")
    axis.set_ylim(0.0, 1.0)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def roc_plot(path, scores: np.ndarray, flags: np.ndarray) -> None:
    """Best-effort ROC curve for the eval command."""
    def _plot(p, _unused):
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        order = np.argsort(-scores, kind="stable")
        y = np.asarray(flags, dtype=bool)[order]
        tpr = np.concatenate([[0.0], np.cumsum(y) / max(int(y.sum()), 1)])
        fpr = np.concatenate([[0.0], np.cumsum(~y) / max(int((~y).sum()), 1)])
        fig, axis = plt.subplots(figsize=(5, 5))
        axis.plot(fpr, tpr)
        axis.plot([0, 1], [0, 1], linestyle="--", color="gray")
        axis.set_xlabel("false positive rate")
        axis.set_ylabel("true positive rate")
        fig.tight_layout()
        fig.savefig(p)
        plt.close(fig)

    _emit_plot(_plot, path, None)
