"""View-level attention: project each combination's states to the output
dimension and blend the K results with learnable softmax weights."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import DataError

OUT_LINEAR_PATH = "aggregate.out"
VIEW_LOGITS_PATH = "aggregate.view_logits"


@dataclass
class EmbeddingSet:
    """Per-combination latents plus their attention-weighted aggregate."""

    per_combination: tuple[dict[str, np.ndarray], ...]
    aggregated: dict[str, np.ndarray]


def out_project(hidden: Mapping[str, Tensor], params: Mapping[str, Tensor]
                ) -> dict[str, Tensor]:
    """Shared h1 -> h2 projection applied to every type's final state."""
    w = params[OUT_LINEAR_PATH + ".weight"]
    b = params[OUT_LINEAR_PATH + ".bias"]
    out = {}
    for name, h in hidden.items():
        if h.shape[1] != w.shape[0]:
            raise DataError(f"type {name}: hidden dim {h.shape[1]} does not match "
                            f"output projection ({w.shape[0]})")
        out[name] = ad.add(ad.matmul(h, w), b)
    return out


def view_weights(params: Mapping[str, Tensor]) -> Tensor:
    """Softmax of the view-attention logits; a probability vector over K."""
    return ad.softmax_vec(params[VIEW_LOGITS_PATH])


def aggregate(per_combination: Sequence[Mapping[str, Tensor]], weights: Tensor
              ) -> dict[str, Tensor]:
    """Convex combination of the K per-combination embeddings, per type."""
    k = len(per_combination)
    if weights.shape != (k,):
        raise DataError(f"expected {k} view weights, got shape {weights.shape}")
    out: dict[str, Tensor] = {}
    for i, z in enumerate(per_combination):
        w_i = ad.pick(weights, (i,))
        for name, t in z.items():
            term = ad.mul(t, w_i)
            out[name] = term if name not in out else ad.add(out[name], term)
    return out
