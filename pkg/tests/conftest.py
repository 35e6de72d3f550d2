import numpy as np
import pytest

from hetgad import (EncoderConfig, InjectionConfig, NodeTypeSpec, RelationSpec,
                    TrainConfig, build_graph)


def small_graph(seed=0, na=12, nb=8, da=6, db=4, density=0.3):
    """Two-type test graph with every node reachable by some edge."""
    rng = np.random.default_rng(seed)
    attrs = {
        "ta": np.maximum(rng.normal(0.3, 0.7, size=(na, da)), 0.0),
        "tb": np.maximum(rng.normal(0.3, 0.7, size=(nb, db)), 0.0),
    }
    edges = {(i, i % nb) for i in range(na)}
    extra = rng.random((na, nb)) < density
    edges |= {(int(i), int(j)) for i, j in zip(*np.nonzero(extra))}
    return build_graph(
        [NodeTypeSpec("ta", na, (da // 2, da - da // 2)),
         NodeTypeSpec("tb", nb, (db // 2, db - db // 2))],
        [RelationSpec("links", "ta", "tb")],
        attrs,
        {"links": sorted(edges)},
        labels={"ta": np.zeros(na, dtype=np.int8),
                "tb": np.zeros(nb, dtype=np.int8)},
    )


def small_train_config(seed=0, epochs=4):
    return TrainConfig(
        seed=seed, max_epochs=epochs,
        encoder=EncoderConfig(hidden_dim=8, out_dim=4, heads=2, depth=2))


@pytest.fixture
def graph():
    return small_graph()


@pytest.fixture
def train_config():
    return small_train_config()


def small_injection(seed=3):
    return InjectionConfig(attr_n={"ta": 2}, attr_k=4, struct_m=4, struct_c=1,
                           struct_relation="links", seed=seed)
