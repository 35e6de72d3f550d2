import numpy as np
import pytest

from hetgad import DataError, auc, auc_by_kind
from hetgad.graph import LABEL_ATTRIBUTE, LABEL_NONE, LABEL_STRUCTURAL
from hetgad.metrics import average_ranks

from _oracles import brute_force_auc


def test_perfect_ranking():
    assert auc([5.0, 4.0, 1.0, 0.5], [1, 1, 0, 0]) == 1.0


def test_all_equal_scores_half():
    assert auc([2.0, 2.0, 2.0, 2.0], [1, 0, 1, 0]) == 0.5


def test_three_node_example():
    assert auc([3.0, 1.0, 2.0], [1, 0, 1]) == 1.0


def test_matches_bruteforce_with_ties():
    rng = np.random.default_rng(0)
    for trial in range(30):
        n = int(rng.integers(4, 25))
        scores = rng.integers(0, 6, size=n).astype(float)  # many ties
        labels = rng.integers(0, 2, size=n)
        if labels.min() == labels.max():
            continue
        assert auc(scores, labels) == pytest.approx(
            brute_force_auc(scores, labels), abs=1e-12)


def test_complement_identity_without_ties():
    rng = np.random.default_rng(1)
    for trial in range(10):
        scores = rng.permutation(20).astype(float)
        labels = (rng.random(20) < 0.4).astype(int)
        if labels.min() == labels.max():
            continue
        assert auc(scores, labels) + auc(-scores, labels) == pytest.approx(1.0)


def test_invariant_under_increasing_transform():
    rng = np.random.default_rng(2)
    scores = rng.normal(size=30)
    labels = (rng.random(30) < 0.3).astype(int)
    labels[0] = 1
    labels[1] = 0
    assert auc(np.exp(scores) * 3 + 7, labels) == pytest.approx(
        auc(scores, labels), abs=1e-12)


def test_single_class_rejected():
    with pytest.raises(DataError, match="single-class"):
        auc([1.0, 2.0], [1, 1])
    with pytest.raises(DataError, match="single-class"):
        auc([1.0, 2.0], [0, 0])


def test_average_ranks_ties():
    assert np.allclose(average_ranks([10.0, 10.0, 5.0]), [2.5, 2.5, 1.0])


def test_auc_by_kind():
    codes = np.array([LABEL_NONE, LABEL_NONE, LABEL_ATTRIBUTE,
                      LABEL_STRUCTURAL, LABEL_NONE], dtype=np.int8)
    scores = np.array([0.1, 0.2, 0.9, 0.05, 0.3])
    by_kind = auc_by_kind(scores, codes)
    assert by_kind["attr"] == 1.0       # 0.9 beats 0.1, 0.2, 0.3
    assert by_kind["struct"] == 0.0     # 0.05 loses to every normal


def test_auc_by_kind_absent_kind_is_none():
    codes = np.array([LABEL_NONE, LABEL_ATTRIBUTE], dtype=np.int8)
    by_kind = auc_by_kind(np.array([0.1, 0.9]), codes)
    assert by_kind["struct"] is None
    assert by_kind["attr"] == 1.0
