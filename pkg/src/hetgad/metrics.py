"""Ranking metrics. AUC uses the average-rank convention for ties."""

from __future__ import annotations

import numpy as np

from .errors import DataError
from .graph import LABEL_NONE


def average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks; tied values share the mean of their rank range."""
    v = np.asarray(values, dtype=np.float64)
    s = np.sort(v)
    left = np.searchsorted(s, v, side="left")
    right = np.searchsorted(s, v, side="right")
    return (left + 1 + right) / 2.0


def auc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Probability a random positive outranks a random negative (ties 1/2)."""
    scores = np.asarray(scores, dtype=np.float64)
    pos = np.asarray(labels).astype(bool)
    n_pos = int(pos.sum())
    n_neg = int(len(pos) - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise DataError("AUC undefined on single-class input "
                        f"({n_pos} positives, {n_neg} negatives)")
    r = average_ranks(scores)
    return float((r[pos].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def auc_by_kind(scores: np.ndarray, codes: np.ndarray) -> dict[str, float | None]:
    """AUC of each anomaly kind against the normal nodes only."""
    from .graph import KIND_NAMES

    codes = np.asarray(codes)
    normal = codes == LABEL_NONE
    out: dict[str, float | None] = {}
    for code, name in KIND_NAMES.items():
        if code == LABEL_NONE:
            continue
        mask = (codes == code) | normal
        if (codes == code).sum() == 0 or normal.sum() == 0:
            out[name] = None
            continue
        out[name] = auc(scores[mask], codes[mask] == code)
    return out
