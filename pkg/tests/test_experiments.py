import json

import numpy as np
import pytest

from hetgad import (DataError, ExperimentSpec, InjectionConfig,
                    PipelineConfig, ScoreWeights,
                    inject_anomalies, random_score_auc, run_ablation,
                    run_pipeline, run_robustness, run_sweep, save_bundle)
from hetgad.experiments import ABLATION_VARIANTS, label_arrays

from conftest import small_graph, small_injection, small_train_config


def injected_graph(seed=0):
    g, _ = inject_anomalies(small_graph(seed=seed, na=20, nb=12),
                            small_injection())
    return g


def quick_config(seed=0, epochs=3, out_dir=None):
    return PipelineConfig(train=small_train_config(seed=seed, epochs=epochs),
                          weights=ScoreWeights(0.4, 0.4), out_dir=out_dir)


def test_pipeline_outputs_and_determinism(tmp_path):
    g = injected_graph()
    report1, metrics1 = run_pipeline(g, quick_config(out_dir=tmp_path / "r1"))
    report2, metrics2 = run_pipeline(g, quick_config(out_dir=tmp_path / "r2"))
    assert 0.0 <= metrics1.auc <= 1.0
    assert metrics1.n_nodes == 32 and metrics1.n_anomalies == 6
    assert metrics1.n_by_kind == {"attr": 2, "struct": 4}
    assert metrics1.seed == 0
    assert (tmp_path / "r1" / "scores.csv").exists()
    payload = json.loads((tmp_path / "r1" / "metrics.json").read_text())
    assert set(payload) == {"auc", "auc_by_kind", "n_anomalies", "n_nodes",
                            "seed", "config", "wall_seconds"}
    assert ((tmp_path / "r1" / "scores.csv").read_bytes()
            == (tmp_path / "r2" / "scores.csv").read_bytes())
    assert metrics1.auc == metrics2.auc


def test_pipeline_accepts_bundle_path(tmp_path):
    g = injected_graph()
    save_bundle(g, tmp_path / "bundle")
    _, metrics = run_pipeline(tmp_path / "bundle", quick_config())
    assert 0.0 <= metrics.auc <= 1.0


def test_pipeline_requires_labels():
    g = small_graph().replace(labels=None)
    with pytest.raises(DataError, match="labels"):
        run_pipeline(g, quick_config())


def test_pipeline_zero_anomalies_single_class_error():
    g = small_graph()  # labels present, all none
    with pytest.raises(DataError, match=r"eval: .*single-class"):
        run_pipeline(g, quick_config())


def test_label_arrays_order():
    g = injected_graph()
    flags, codes = label_arrays(g)
    assert flags.sum() == 6
    assert np.array_equal(flags, codes != 0)


def test_random_control_auc_close_to_half():
    g = injected_graph()
    aucs = random_score_auc(g, seeds=range(10))
    assert len(aucs) == 10
    assert 0.3 <= float(np.mean(aucs)) <= 0.7  # tiny graph, loose band


def test_ablation_runs_all_variants(tmp_path):
    g = injected_graph()
    spec = ExperimentSpec(kind="ablation", grid=("decoders",), seeds=(0, 1),
                          data=g)
    results = run_ablation(spec, base=quick_config(), out_dir=tmp_path)
    assert set(results) == set(ABLATION_VARIANTS)
    assert all(len(v) == 2 for v in results.values())
    csv = (tmp_path / "ablation.csv").read_text().splitlines()
    assert csv[0] == "variant,seed,auc"
    assert len(csv) == 1 + 4 * 2
    summary = json.loads((tmp_path / "ablation_summary.json").read_text())
    assert set(summary) == set(ABLATION_VARIANTS)
    assert (tmp_path / "ablation.svg").exists()


def test_ablation_spec_kind_checked():
    with pytest.raises(DataError):
        run_ablation(ExperimentSpec(kind="lambda_sweep", grid=(1,), seeds=(0,),
                                    data=small_graph()))


def test_sweep_lambda_skips_infeasible(tmp_path):
    g = injected_graph()
    spec = ExperimentSpec(kind="lambda_sweep",
                          grid=((0.2, 0.2), (0.6, 0.6), (0.3, 0.5)),
                          seeds=(0,), data=g)
    with pytest.warns(UserWarning, match="simplex"):
        cells = run_sweep(spec, base=quick_config(), out_dir=tmp_path)
    status = {str(c.point): c.status for c in cells}
    assert status["(0.6, 0.6)"] == "skipped"
    assert status["(0.2, 0.2)"] == "ok"
    rows = (tmp_path / "lambda_sweep.csv").read_text().splitlines()
    assert any("skipped" in r for r in rows)
    assert (tmp_path / "lambda_sweep.svg").exists()


def test_sweep_depth_counts_runs():
    g = injected_graph()
    spec = ExperimentSpec(kind="depth_sweep", grid=(1, 2), seeds=(0, 1), data=g)
    cells = run_sweep(spec, base=quick_config())
    assert [len(c.reports) for c in cells] == [2, 2]
    assert all(c.mean_auc is not None for c in cells)


def test_sweep_lr_invalid_point_skipped():
    g = injected_graph()
    spec = ExperimentSpec(kind="lr_sweep", grid=(0.005, -1.0), seeds=(0,), data=g)
    with pytest.warns(UserWarning):
        cells = run_sweep(spec, base=quick_config())
    assert cells[1].status == "skipped"


def test_sweep_unknown_kind():
    spec = ExperimentSpec(kind="ablation", grid=(1,), seeds=(0,),
                          data=small_graph())
    with pytest.raises(DataError):
        run_sweep(spec)


def test_experiment_spec_validation():
    with pytest.raises(DataError):
        ExperimentSpec(kind="lr_sweep", grid=(), seeds=(0,), data=None)
    with pytest.raises(DataError):
        ExperimentSpec(kind="lr_sweep", grid=(1,), seeds=(), data=None)


def test_robustness_scales_counts(tmp_path):
    base = small_graph(seed=3, na=30, nb=20)
    cfg = InjectionConfig(attr_n={"ta": 1}, attr_k=3, struct_m=4, struct_c=1,
                          struct_relation="links", seed=5)
    results = run_robustness(base, cfg, factors=(1, 2), seeds=(0,),
                             base=quick_config(), out_dir=tmp_path)
    assert set(results) == {1, 2}
    assert results[1][0].n_anomalies == 5    # 1 attr + 4 struct
    assert results[2][0].n_anomalies == 10   # 2 attr + 8 struct
    rows = (tmp_path / "robustness.csv").read_text().splitlines()
    assert rows[0] == "factor,seed,auc"
    assert (tmp_path / "robustness.svg").exists()


def test_variant_config_drops_loss_and_score_terms():
    from hetgad.experiments import _variant_config

    base = quick_config()
    v = _variant_config(base, "no_structure", seed=7)
    assert v.train.use_structure is False
    assert v.train.seed == 7
    assert v.weights.structure == 0.0
    assert v.weights.attribute == pytest.approx(2 / 3)
    full = _variant_config(base, "full", seed=7)
    assert full.train.use_structure and full.train.use_attribute
