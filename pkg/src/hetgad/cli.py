"""Command-line entry point.

Subcommands: generate, split-views, inject, train, score, eval, ablate,
sweep, gradcheck. Exit codes: 0 success, 1 usage error, 2 data error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from .decode import ScoreWeights, anomaly_score, read_scores_csv, write_scores_csv
from .encoder import EncoderConfig
from .errors import DataError, NumericalError, UsageError
from .experiments import (ExperimentSpec, PipelineConfig, roc_plot,
                          run_ablation, run_robustness, run_sweep)
from .graph import KIND_CODES, LABEL_NONE, load_bundle, save_bundle
from .inject import InjectionConfig, inject_anomalies
from .metrics import auc, auc_by_kind
from .synth import (NodeModel, RelationModel, SynthConfig, generate, preset)
from .train import (TrainConfig, forward_loss, grad_check, gradcheck_fixture,
                    init_params, load_model, prepare, save_model,
                    schema_fingerprint, train_model)
from .views import partition_of, split_views, standardize, with_partition

GRADCHECK_TOLERANCE = 1e-4


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); we map usage errors to 1
        raise UsageError(message)


def _parse_type_map(text: str, value_name: str) -> dict[str, int]:
    out: dict[str, int] = {}
    for item in text.split(","):
        if "=" not in item:
            raise UsageError(f"expected TYPE={value_name} entries, got {item!r}")
        key, _, value = item.partition("=")
        try:
            out[key.strip()] = int(value)
        except ValueError:
            raise UsageError(f"bad {value_name} in {item!r}") from None
    return out


def _parse_seeds(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(s) for s in text.split(","))
    except ValueError:
        raise UsageError(f"bad seed list: {text!r}") from None


def _train_config(args, seed_default: int = 0) -> TrainConfig:
    return TrainConfig(
        learning_rate=args.lr,
        weight_decay=args.weight_decay,
        max_epochs=args.epochs,
        seed=getattr(args, "seed", seed_default) or seed_default,
        loss=args.loss,
        encoder=EncoderConfig(
            hidden_dim=args.hidden, out_dim=args.outdim, heads=args.heads,
            depth=args.depth, attn_scale=args.attn_scale),
    )


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--lr", type=float, default=5e-3)
    p.add_argument("--weight-decay", type=float, default=1e-5)
    p.add_argument("--hidden", type=int, default=64)
    p.add_argument("--outdim", type=int, default=16)
    p.add_argument("--heads", type=int, default=2)
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--loss", choices=("frobenius", "squared"), default="frobenius")
    p.add_argument("--attn-scale", choices=("overall", "per_head"), default="overall")


def _synth_config_from_file(path: Path, seed: int) -> SynthConfig:
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise DataError(f"{path}: file missing") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from None
    try:
        node_types = tuple(
            NodeModel(name=t["name"], num_nodes=int(t["num_nodes"]),
                      attr_dim=int(t["attr_dim"]), num_views=int(t["num_views"]),
                      mean_scale=float(t.get("mean_scale", 1.0)),
                      noise_scale=float(t.get("noise_scale", 1.0)),
                      nonnegative=bool(t.get("nonnegative", True)),
                      on_fraction=(None if t.get("on_fraction") is None
                                   else float(t["on_fraction"])),
                      scale_sigma=float(t.get("scale_sigma", 0.0)))
            for t in raw["node_types"])
        relations = tuple(
            RelationModel(name=r["name"], src_type=r["src_type"],
                          dst_type=r["dst_type"],
                          intra_prob=float(r["intra_prob"]),
                          inter_prob=float(r["inter_prob"]))
            for r in raw["relations"])
    except (KeyError, TypeError) as exc:
        raise DataError(f"{path}: bad generator config ({exc})") from None
    return SynthConfig(node_types=node_types, relations=relations,
                       num_blocks=int(raw.get("num_blocks", 5)),
                       seed=int(raw.get("seed", seed)),
                       anomaly_ratio=raw.get("anomaly_ratio"))


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _cmd_generate(args) -> int:
    if bool(args.preset) == bool(args.config):
        raise UsageError("exactly one of --preset / --config is required")
    if args.preset:
        cfg = preset(args.preset, seed=args.seed)
    else:
        cfg = _synth_config_from_file(Path(args.config), args.seed)
    g = generate(cfg)
    save_bundle(g, args.out)
    print(f"wrote bundle with {g.num_nodes_total} nodes to {args.out}")
    return 0


def _cmd_split_views(args) -> int:
    g = load_bundle(args.in_dir)
    views = _parse_type_map(args.views, "view count") if args.views else {}
    partition = split_views(g, views, args.seed)
    g = with_partition(g, partition)
    if args.standardize:
        g = standardize(g)
    save_bundle(g, args.in_dir)
    dims = {t.name: list(t.view_dims) for t in g.node_types}
    print(f"recorded view partition {dims} in {args.in_dir}")
    return 0


def _cmd_inject(args) -> int:
    g = load_bundle(args.in_dir)
    cfg = InjectionConfig(
        attr_n=_parse_type_map(args.attr_n, "count") if args.attr_n else {},
        attr_k=args.attr_k,
        struct_m=args.struct_m,
        struct_c=args.struct_c,
        struct_relation=args.struct_relation,
        seed=args.seed,
    )
    injected, report = inject_anomalies(g, cfg)
    save_bundle(injected, args.out)
    report_path = Path(args.out) / "injection_report.json"
    report_path.write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    print(f"labeled {len(report.labeled)} anomalies; bundle written to {args.out}")
    return 0


def _cmd_train(args) -> int:
    g = load_bundle(args.data)
    partition = partition_of(g)
    config = _train_config(args)
    result = train_model(g, partition, config, log_every=args.log_every)
    save_model(result.params, config, schema_fingerprint(g, partition), args.out)
    print(f"final loss {result.trace[-1, 0]:.6f} "
          f"(initial {result.trace[0, 0]:.6f}); model written to {args.out}")
    return 0


def _cmd_score(args) -> int:
    g = load_bundle(args.data)
    partition = partition_of(g)
    model = load_model(args.model)
    expected = schema_fingerprint(g, partition)
    if model.schema_hash != expected:
        raise DataError("model was trained on a different schema/view partition "
                        f"(model {model.schema_hash[:12]}, data {expected[:12]})")
    weights = ScoreWeights(args.lambda1, args.lambda2)
    prepared = prepare(g, partition, model.config)
    forward = forward_loss(g, partition, model.params, model.config,
                           prepared=prepared)
    report = anomaly_score(g, forward.reconstruction, weights,
                           index=prepared.index, dense_adj=prepared.dense_adj)
    write_scores_csv(report, args.out)
    print(f"wrote {prepared.index.total} scores to {args.out}")
    return 0


def _read_labels_standalone(path: Path) -> dict[tuple[str, int], int]:
    if not path.exists():
        raise DataError(f"{path}: file missing")
    out: dict[tuple[str, int], int] = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or (lineno == 1 and line.startswith("type,")):
                continue
            cells = line.split(",")
            if len(cells) != 4:
                raise DataError(f"{path}:{lineno}: expected 4 fields")
            try:
                idx = int(cells[1])
            except ValueError:
                raise DataError(f"{path}:{lineno}: malformed index") from None
            if cells[3] not in KIND_CODES:
                raise DataError(f"{path}:{lineno}: unknown kind {cells[3]!r}")
            out[(cells[0], idx)] = KIND_CODES[cells[3]]
    return out


def _cmd_eval(args) -> int:
    start = time.perf_counter()
    scores = read_scores_csv(args.scores)
    labels = _read_labels_standalone(Path(args.labels))
    codes = []
    for tname, local in zip(scores["type"], scores["local_index"]):
        key = (str(tname), int(local))
        if key not in labels:
            raise DataError(f"labels file has no entry for node {key}")
        codes.append(labels[key])
    codes = np.asarray(codes, dtype=np.int8)
    flags = codes != LABEL_NONE
    overall = auc(scores["score"], flags)
    metrics = {
        "auc": overall,
        "auc_by_kind": auc_by_kind(scores["score"], codes),
        "n_anomalies": int(flags.sum()),
        "n_nodes": int(len(flags)),
        "seed": None,
        "config": {"scores": str(args.scores), "labels": str(args.labels)},
        "wall_seconds": time.perf_counter() - start,
    }
    Path(args.out).write_text(json.dumps(metrics, indent=2) + "\n")
    if args.plot:
        roc_plot(args.plot, scores["score"], flags)
    print(f"AUC {overall:.4f} over {metrics['n_nodes']} nodes "
          f"({metrics['n_anomalies']} anomalies); metrics written to {args.out}")
    return 0


def _cmd_ablate(args) -> int:
    spec = ExperimentSpec(kind="ablation", grid=("decoders",),
                          seeds=_parse_seeds(args.seeds), data=args.data)
    base = PipelineConfig(train=_train_config(args),
                          weights=ScoreWeights(args.lambda1, args.lambda2))
    results = run_ablation(spec, base=base, out_dir=args.out)
    for variant, reports in results.items():
        mean = float(np.mean([r.auc for r in reports]))
        print(f"{variant:14s} mean AUC {mean:.4f} over {len(reports)} seeds")
    return 0


def _cmd_sweep(args) -> int:
    seeds = _parse_seeds(args.seeds)
    base = PipelineConfig(train=_train_config(args),
                          weights=ScoreWeights(args.lambda1, args.lambda2))
    if args.kind == "count":
        if not args.struct_relation and not args.attr_n:
            raise UsageError("count sweeps need injection flags "
                             "(--attr-n and/or --struct-relation)")
        inject_cfg = InjectionConfig(
            attr_n=_parse_type_map(args.attr_n, "count") if args.attr_n else {},
            attr_k=args.attr_k, struct_m=args.struct_m, struct_c=args.struct_c,
            struct_relation=args.struct_relation, seed=args.inject_seed)
        try:
            factors = [int(x) for x in args.grid.split(",")]
        except ValueError:
            raise UsageError(f"bad count grid: {args.grid!r}") from None
        results = run_robustness(args.data, inject_cfg, factors, seeds,
                                 base=base, out_dir=args.out)
        for factor, reports in results.items():
            mean = float(np.mean([r.auc for r in reports]))
            print(f"x{factor}: mean AUC {mean:.4f}")
        return 0

    kind = {"lambda": "lambda_sweep", "depth": "depth_sweep", "lr": "lr_sweep"}[args.kind]
    grid: list = []
    try:
        for cell in args.grid.split(","):
            if args.kind == "lambda":
                l1, _, l2 = cell.partition(":")
                grid.append((float(l1), float(l2)))
            elif args.kind == "depth":
                grid.append(int(cell))
            else:
                grid.append(float(cell))
    except ValueError:
        raise UsageError(f"bad grid for kind {args.kind}: {args.grid!r}") from None
    spec = ExperimentSpec(kind=kind, grid=tuple(grid), seeds=seeds, data=args.data)
    cells = run_sweep(spec, base=base, out_dir=args.out)
    for cell in cells:
        if cell.status == "skipped":
            print(f"{cell.point}: skipped ({cell.reason})")
        else:
            print(f"{cell.point}: mean AUC {cell.mean_auc:.4f}")
    return 0


def _cmd_gradcheck(args) -> int:
    g, partition, config = gradcheck_fixture(args.seed)
    params = init_params(g, partition, config)
    err = grad_check(g, partition, params, config, sample_size=args.samples,
                     seed=args.seed)
    ok = err <= GRADCHECK_TOLERANCE
    print(f"max relative gradient error {err:.3e} over {args.samples} samples "
          f"({'PASS' if ok else 'FAIL'} at {GRADCHECK_TOLERANCE:g})")
    if not ok:
        raise NumericalError(f"gradient check failed: {err:.3e} > "
                             f"{GRADCHECK_TOLERANCE:g}")
    return 0


# ---------------------------------------------------------------------------
# Parser assembly
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hetgad",
                     description="Heterogeneity-aware graph anomaly detection")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="write a synthetic graph bundle")
    p.add_argument("--preset")
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("split-views", help="record a random view partition")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--views", help="TYPE=K[,TYPE=K...]")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--standardize", action="store_true")
    p.set_defaults(func=_cmd_split_views)

    p = sub.add_parser("inject", help="inject labeled anomalies")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--attr-n", help="TYPE=N[,TYPE=N...]")
    p.add_argument("--attr-k", type=int, default=50)
    p.add_argument("--struct-m", type=int, default=15)
    p.add_argument("--struct-c", type=int, default=0)
    p.add_argument("--struct-relation")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_inject)

    p = sub.add_parser("train", help="train a model on a bundle")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--log-every", type=int, default=0)
    _add_train_flags(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("score", help="score nodes with a trained model")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--lambda1", type=float, default=0.4)
    p.add_argument("--lambda2", type=float, default=0.4)
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("eval", help="compute AUC metrics from scores + labels")
    p.add_argument("--scores", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--plot")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("ablate", help="train decoder-ablation variants")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seeds", default="0,1,2,3,4")
    p.add_argument("--lambda1", type=float, default=0.4)
    p.add_argument("--lambda2", type=float, default=0.4)
    _add_train_flags(p)
    p.set_defaults(func=_cmd_ablate)

    p = sub.add_parser("sweep", help="grid experiments (lambda/depth/lr/count)")
    p.add_argument("--data", required=True)
    p.add_argument("--kind", choices=("lambda", "depth", "lr", "count"),
                   required=True)
    p.add_argument("--grid", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seeds", default="0,1,2")
    p.add_argument("--lambda1", type=float, default=0.4)
    p.add_argument("--lambda2", type=float, default=0.4)
    p.add_argument("--attr-n")
    p.add_argument("--attr-k", type=int, default=50)
    p.add_argument("--struct-m", type=int, default=15)
    p.add_argument("--struct-c", type=int, default=0)
    p.add_argument("--struct-relation")
    p.add_argument("--inject-seed", type=int, default=0)
    _add_train_flags(p)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("gradcheck", help="finite-difference gradient check")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=200)
    p.set_defaults(func=_cmd_gradcheck)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
