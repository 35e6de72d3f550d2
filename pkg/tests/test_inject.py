import numpy as np
import pytest

from hetgad import (DataError, InjectionConfig, NodeTypeSpec, RelationSpec,
                    build_graph, inject_anomalies, inject_attribute_anomalies,
                    inject_structural_anomalies, validate_graph)
from hetgad.graph import LABEL_ATTRIBUTE, LABEL_NONE, LABEL_STRUCTURAL

from conftest import small_graph


def pool_graph():
    # node 0 at the origin, node 1 close, node 2 far
    return build_graph(
        [NodeTypeSpec("t", 3, (2,))],
        [],
        {"t": [[0.0, 0.0], [1.0, 0.0], [3.0, 4.0]]},
        {},
    )


def test_swap_picks_most_distant_of_pool():
    g = pool_graph()
    # find a seed whose single target is node 0 (pool = the other two)
    for seed in range(50):
        cfg = InjectionConfig(attr_n={"t": 1}, attr_k=2, seed=seed)
        out, report = inject_attribute_anomalies(g, cfg)
        swap = report.attribute_swaps[0]
        if swap["node"] == 0:
            assert swap["source"] == 2  # distance 25 beats distance 1
            assert swap["distance_sq"] == pytest.approx(25.0)
            assert np.array_equal(out.attrs["t"][0], [3.0, 4.0])
            return
    pytest.fail("no seed selected node 0 as the target")


def test_swap_source_is_argmax_over_reported_candidates():
    g = small_graph(seed=4)
    cfg = InjectionConfig(attr_n={"ta": 3, "tb": 2}, attr_k=4, seed=7)
    out, report = inject_attribute_anomalies(g, cfg)
    assert len(report.attribute_swaps) == 5
    for swap in report.attribute_swaps:
        x = g.attrs[swap["type"]]
        d2 = {c: float(((x[c] - x[swap["node"]]) ** 2).sum())
              for c in swap["candidates"]}
        best = max(d2, key=d2.get)
        assert d2[swap["source"]] == pytest.approx(d2[best])
        assert np.array_equal(out.attrs[swap["type"]][swap["node"]],
                              x[swap["source"]])


def test_single_candidate_copied_regardless():
    g = build_graph([NodeTypeSpec("t", 2, (1,))], [],
                    {"t": [[5.0], [6.0]]}, {})
    out, report = inject_attribute_anomalies(
        g, InjectionConfig(attr_n={"t": 1}, attr_k=1, seed=0))
    swap = report.attribute_swaps[0]
    assert out.attrs["t"][swap["node"], 0] == g.attrs["t"][swap["source"], 0]


def test_zero_targets_no_change():
    g = small_graph()
    out, report = inject_attribute_anomalies(
        g, InjectionConfig(attr_n={}, attr_k=5, seed=0))
    assert report.labeled == []
    assert out == g.replace(labels=out.labels)
    assert all((codes == LABEL_NONE).all() for codes in out.labels.values())


def test_attribute_injection_changes_only_attrs():
    g = small_graph(seed=2)
    out, _ = inject_attribute_anomalies(
        g, InjectionConfig(attr_n={"ta": 2}, attr_k=3, seed=1))
    for rel in g.edges:
        assert np.array_equal(out.edges[rel], g.edges[rel])
    assert not np.array_equal(out.attrs["ta"], g.attrs["ta"])
    assert np.array_equal(out.attrs["tb"], g.attrs["tb"])


def test_pool_too_small_rejected():
    g = pool_graph()
    with pytest.raises(DataError, match="unlabeled"):
        inject_attribute_anomalies(g, InjectionConfig(attr_n={"t": 2}, attr_k=2))


def test_bipartite_group_m4():
    g = small_graph(seed=3)
    base_edges = len(g.edges["links"])
    cfg = InjectionConfig(struct_m=4, struct_c=1, struct_relation="links", seed=5)
    out, report = inject_structural_anomalies(g, cfg)
    clique = report.cliques[0]
    assert len(clique["src_nodes"]) == 2 and len(clique["dst_nodes"]) == 2
    assert len(report.labeled) == 4
    # complete bipartite block: every cross pair present afterwards
    dense = out.dense_adjacency("links")
    for s in clique["src_nodes"]:
        for d in clique["dst_nodes"]:
            assert dense[s, d] == 1.0
    assert len(out.edges["links"]) == base_edges + clique["new_edges"]
    assert validate_graph(out) == []


def test_structural_zero_groups_no_change():
    g = small_graph()
    out, report = inject_structural_anomalies(
        g, InjectionConfig(struct_c=0, seed=0))
    assert report.labeled == [] and np.array_equal(out.edges["links"],
                                                   g.edges["links"])


def test_structural_groups_are_node_disjoint():
    g = small_graph(seed=6, na=20, nb=14)
    cfg = InjectionConfig(struct_m=5, struct_c=2, struct_relation="links", seed=2)
    out, report = inject_structural_anomalies(g, cfg)
    assert len(report.labeled) == 10  # m * c
    assert len(set(report.labeled)) == 10
    # src/dst live in different types; compare per clique per role
    assert not (set(report.cliques[0]["src_nodes"])
                & set(report.cliques[1]["src_nodes"]))
    assert not (set(report.cliques[0]["dst_nodes"])
                & set(report.cliques[1]["dst_nodes"]))


def test_structural_changes_only_edges():
    g = small_graph(seed=8)
    out, _ = inject_structural_anomalies(
        g, InjectionConfig(struct_m=4, struct_c=1, struct_relation="links", seed=3))
    for t in g.node_types:
        assert np.array_equal(out.attrs[t.name], g.attrs[t.name])


def test_structural_same_type_relation():
    rng = np.random.default_rng(0)
    g = build_graph([NodeTypeSpec("t", 12, (3,))],
                    [RelationSpec("follows", "t", "t")],
                    {"t": rng.normal(size=(12, 3))},
                    {"follows": [(0, 1), (2, 3)]})
    out, report = inject_structural_anomalies(
        g, InjectionConfig(struct_m=5, struct_c=1, struct_relation="follows",
                           seed=1))
    clique = report.cliques[0]
    assert len(clique["src_nodes"]) == 3 and len(clique["dst_nodes"]) == 2
    assert len(set(clique["src_nodes"]) & set(clique["dst_nodes"])) == 0
    assert validate_graph(out) == []


def test_structural_unknown_or_reverse_relation_rejected():
    g = small_graph()
    with pytest.raises(DataError):
        inject_structural_anomalies(
            g, InjectionConfig(struct_m=4, struct_c=1, struct_relation="nope"))
    with pytest.raises(DataError, match="reverse"):
        inject_structural_anomalies(
            g, InjectionConfig(struct_m=4, struct_c=1,
                               struct_relation="links__rev"))


def test_combined_injection_counts_and_disjoint_labels():
    g = small_graph(seed=1, na=24, nb=16)
    cfg = InjectionConfig(attr_n={"ta": 3, "tb": 2}, attr_k=4,
                          struct_m=6, struct_c=2, struct_relation="links",
                          seed=9)
    out, report = inject_anomalies(g, cfg)
    codes = np.concatenate([out.labels["ta"], out.labels["tb"]])
    assert (codes == LABEL_ATTRIBUTE).sum() == 5
    assert (codes == LABEL_STRUCTURAL).sum() == 12
    assert len(report.labeled) == len(set(report.labeled)) == 17


def test_determinism_per_seed():
    g = small_graph(seed=12)
    cfg = InjectionConfig(attr_n={"ta": 2}, attr_k=3, struct_m=4, struct_c=1,
                          struct_relation="links", seed=21)
    out1, rep1 = inject_anomalies(g, cfg)
    out2, rep2 = inject_anomalies(g, cfg)
    assert out1 == out2
    assert rep1.to_dict() == rep2.to_dict()


def test_input_graph_untouched():
    g = small_graph(seed=13)
    before = {k: v.copy() for k, v in g.attrs.items()}
    inject_anomalies(g, InjectionConfig(attr_n={"ta": 2}, attr_k=3,
                                        struct_m=4, struct_c=1,
                                        struct_relation="links", seed=2))
    for k, v in before.items():
        assert np.array_equal(g.attrs[k], v)
    assert all((codes == LABEL_NONE).all() for codes in g.labels.values())
