import numpy as np
import pytest

from hetgad import DataError, generate, preset, validate_graph
from hetgad.synth import (NodeModel, RelationModel, SynthConfig,
                          block_assignments, expected_edges)


def simple_config(density, seed=0, n_src=3, n_dst=2):
    return SynthConfig(
        node_types=(NodeModel("a", n_src, 4, 2), NodeModel("b", n_dst, 3, 1)),
        relations=(RelationModel.uniform("e", "a", "b", density),),
        num_blocks=2, seed=seed)


def test_density_zero_no_edges():
    g = generate(simple_config(0.0))
    assert len(g.edges["e"]) == 0


def test_density_one_complete_bipartite():
    g = generate(simple_config(1.0))
    assert len(g.edges["e"]) == 6


def test_generated_graph_is_valid_and_deterministic():
    g1 = generate(simple_config(0.5, seed=9))
    g2 = generate(simple_config(0.5, seed=9))
    assert validate_graph(g1) == []
    assert g1 == g2
    g3 = generate(simple_config(0.5, seed=10))
    assert g3 != g1


def test_labels_default_none():
    g = generate(simple_config(0.5))
    assert g.labels is not None
    assert all((codes == 0).all() for codes in g.labels.values())


def test_edge_count_within_five_sigma():
    cfg = SynthConfig(
        node_types=(NodeModel("a", 120, 4, 2), NodeModel("b", 80, 3, 1)),
        relations=(RelationModel("e", "a", "b", 0.2, 0.05),),
        num_blocks=4, seed=3)
    for seed in range(5):
        g = generate(SynthConfig(cfg.node_types, cfg.relations, cfg.num_blocks,
                                 seed=seed))
        rel = cfg.relations[0]
        mean = expected_edges(cfg, rel)
        bs = block_assignments(120, 4)
        bd = block_assignments(80, 4)
        intra = int((bs[:, None] == bd[None, :]).sum())
        total = 120 * 80
        var = (intra * rel.intra_prob * (1 - rel.intra_prob)
               + (total - intra) * rel.inter_prob * (1 - rel.inter_prob))
        assert abs(len(g.edges["e"]) - mean) <= 5 * np.sqrt(var)


def test_block_assignments_near_equal():
    b = block_assignments(10, 3)
    counts = np.bincount(b)
    assert counts.sum() == 10 and counts.max() - counts.min() <= 1


def test_attribute_model_block_structure():
    cfg = SynthConfig(
        node_types=(NodeModel("a", 60, 30, 2, mean_scale=3.0, noise_scale=0.1),
                    NodeModel("b", 10, 4, 1)),
        relations=(RelationModel.uniform("e", "a", "b", 0.2),),
        num_blocks=2, seed=1)
    g = generate(cfg)
    x = g.attrs["a"]
    half = 30
    within = np.linalg.norm(x[:half].mean(axis=0) - x[1:half].mean(axis=0))
    across = np.linalg.norm(x[:half].mean(axis=0) - x[half:].mean(axis=0))
    assert across > within


def test_nonnegative_and_scale_sigma():
    cfg = SynthConfig(
        node_types=(NodeModel("a", 50, 20, 2, scale_sigma=0.5),
                    NodeModel("b", 10, 4, 1)),
        relations=(RelationModel.uniform("e", "a", "b", 0.1),),
        num_blocks=2, seed=2)
    g = generate(cfg)
    assert (g.attrs["a"] >= 0).all()
    norms = np.linalg.norm(g.attrs["a"], axis=1)
    assert norms.std() / norms.mean() > 0.2  # per-node scale spread is real


def test_on_fraction_binary_means():
    cfg = SynthConfig(
        node_types=(NodeModel("a", 40, 50, 2, mean_scale=2.0, noise_scale=0.01,
                              on_fraction=0.3),
                    NodeModel("b", 10, 4, 1)),
        relations=(RelationModel.uniform("e", "a", "b", 0.1),),
        num_blocks=2, seed=4)
    g = generate(cfg)
    on = g.attrs["a"] > 1.0
    assert 0.1 < on.mean() < 0.5


def test_coaid_mini_preset_matches_published_stats():
    cfg = preset("coaid-mini", seed=0)
    by_name = {t.name: t for t in cfg.node_types}
    assert by_name["news"].num_nodes == 546        # ceil(5457 / 10)
    assert by_name["source"].num_nodes == 199      # kept (below the cutoff)
    assert by_name["news"].attr_dim == 1536
    assert by_name["source"].attr_dim == 768
    assert by_name["news"].num_views == 3
    assert by_name["source"].num_views == 2
    assert cfg.anomaly_ratio == pytest.approx(0.1701)


def test_politifact_and_gossipcop_ratios():
    assert preset("politifact-mini").anomaly_ratio == pytest.approx(0.3458)
    assert preset("gossipcop-mini").anomaly_ratio == pytest.approx(0.2217)
    assert preset("imdb-mini").anomaly_ratio == pytest.approx(0.0250)


def test_unknown_preset_rejected():
    with pytest.raises(DataError, match="unknown preset"):
        preset("nope")


def test_invalid_config_rejected():
    with pytest.raises(DataError):
        generate(simple_config(1.5))
    cfg = SynthConfig(node_types=(NodeModel("a", 3, 2, 5),), relations=(),
                      num_blocks=2, seed=0)
    with pytest.raises(DataError, match="num_views"):
        generate(cfg)
