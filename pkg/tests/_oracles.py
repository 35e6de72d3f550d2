"""Independent scalar oracles used by the unit and acceptance tests.

Everything here is written with explicit Python loops over floats, kept
deliberately separate from the library's vectorized implementations.
"""

import math

import numpy as np

from hetgad import NodeTypeSpec, RelationSpec, build_graph
from hetgad import autodiff as ad


def brute_force_auc(scores, labels):
    """Pairwise comparison count; ties contribute one half."""
    pos = [s for s, y in zip(scores, labels) if y]
    neg = [s for s, y in zip(scores, labels) if not y]
    total = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                total += 1.0
            elif p == q:
                total += 0.5
    return total / (len(pos) * len(neg))


def mat_vec(v, m):
    """Row vector times matrix, scalar by scalar."""
    return [sum(v[u] * m[u][k] for u in range(len(v))) for k in range(len(m[0]))]


def vec_add(a, b):
    return [x + y for x, y in zip(a, b)]


def dot(a, b):
    return sum(x * y for x, y in zip(a, b))


def sigmoid(x):
    return 1.0 / (1.0 + math.exp(-x))


# ---------------------------------------------------------------------------
# The 2-node / 1-edge toy model, fully hand-specified
# ---------------------------------------------------------------------------

TOY_X = [[1.0, 2.0], [-1.0, 0.5]]
TOY_W_IN = [[0.3, -0.1], [0.2, 0.4]]
TOY_B_IN = [0.01, -0.02]
TOY_W_K = [[0.5, 0.1], [-0.2, 0.3]]
TOY_B_K = [0.0, 0.1]
TOY_W_Q = [[0.4, -0.3], [0.1, 0.2]]
TOY_B_Q = [0.05, 0.0]
TOY_W_M = [[0.2, 0.2], [-0.1, 0.5]]
TOY_B_M = [0.0, 0.0]
TOY_W_ATT_FWD = [[1.1, -0.2], [0.3, 0.9]]
TOY_W_MES_FWD = [[0.7, 0.1], [-0.3, 1.2]]
TOY_W_ATT_REV = [[0.9, 0.2], [-0.1, 0.8]]
TOY_W_MES_REV = [[0.6, -0.2], [0.4, 1.0]]
TOY_W_OUT = [[0.6, -0.4], [0.2, 0.3]]
TOY_B_OUT = [0.02, 0.03]
TOY_MU_FWD = 1.3
TOY_MU_REV = 0.8
TOY_W_PROJ = [[0.5, 0.2], [-0.3, 0.7]]
TOY_B_PROJ = [0.01, 0.0]
TOY_W_DEC = [[0.4, -0.2], [0.1, 0.3]]
TOY_B_DEC = [[0.05, -0.05], [0.0, 0.02]]


def toy_graph():
    g = build_graph(
        [NodeTypeSpec("t", 2, (2,))],
        [RelationSpec("r", "t", "t")],
        {"t": np.array(TOY_X)},
        {"r": [(0, 1)]},
    )
    return g


def toy_params(dtype=np.float64):
    def p(x):
        return ad.parameter(np.array(x, dtype=dtype), dtype)

    mu = np.ones((1, 2, 1))
    mu[0, 0, 0] = TOY_MU_FWD
    mu[0, 1, 0] = TOY_MU_REV
    return {
        "encoder.in:t.view0.weight": p(TOY_W_IN),
        "encoder.in:t.view0.bias": p(TOY_B_IN),
        "encoder.layer0.type:t.key0.weight": p(TOY_W_K),
        "encoder.layer0.type:t.key0.bias": p(TOY_B_K),
        "encoder.layer0.type:t.query0.weight": p(TOY_W_Q),
        "encoder.layer0.type:t.query0.bias": p(TOY_B_Q),
        "encoder.layer0.type:t.message0.weight": p(TOY_W_M),
        "encoder.layer0.type:t.message0.bias": p(TOY_B_M),
        "encoder.layer0.rel:r.head0.w_att": p(TOY_W_ATT_FWD),
        "encoder.layer0.rel:r.head0.w_mes": p(TOY_W_MES_FWD),
        "encoder.layer0.rel:r__rev.head0.w_att": p(TOY_W_ATT_REV),
        "encoder.layer0.rel:r__rev.head0.w_mes": p(TOY_W_MES_REV),
        "encoder.layer0.out:t.weight": p(TOY_W_OUT),
        "encoder.layer0.out:t.bias": p(TOY_B_OUT),
        "encoder.meta_scale": p(mu),
        "aggregate.out.weight": p(TOY_W_PROJ),
        "aggregate.out.bias": p(TOY_B_PROJ),
        "aggregate.view_logits": p([0.0]),
        "decode.attr:t.weight": p(TOY_W_DEC),
        "decode.attr:t.bias": p(TOY_B_DEC),
        "decode.ntype:t.weight": p([[0.3], [-0.2]]),
        "decode.ntype:t.bias": p([0.1]),
        "decode.type_attention": p([1.0]),
    }


def toy_oracle():
    """Scalar-by-scalar forward pass of the toy model.

    Returns a dict with h0, h1, z, adjacency reconstruction, attribute
    reconstruction, node-type reconstruction and anomaly scores for
    weights (0.4, 0.4, 0.2).
    """
    h0 = [vec_add(mat_vec(x, TOY_W_IN), TOY_B_IN) for x in TOY_X]
    k = [vec_add(mat_vec(h, TOY_W_K), TOY_B_K) for h in h0]
    q = [vec_add(mat_vec(h, TOY_W_Q), TOY_B_Q) for h in h0]
    m = [vec_add(mat_vec(h, TOY_W_M), TOY_B_M) for h in h0]

    scale = math.sqrt(2.0)
    raw_fwd = dot(mat_vec(k[0], TOY_W_ATT_FWD), q[1]) * TOY_MU_FWD / scale
    raw_rev = dot(mat_vec(k[1], TOY_W_ATT_REV), q[0]) * TOY_MU_REV / scale
    # Each target has exactly one incoming edge, so its softmax weight is 1.
    msg_to_1 = mat_vec(m[0], TOY_W_MES_FWD)
    msg_to_0 = mat_vec(m[1], TOY_W_MES_REV)
    h_tilde = [msg_to_0, msg_to_1]

    h1 = []
    for i in range(2):
        lin = vec_add(mat_vec(h_tilde[i], TOY_W_OUT), TOY_B_OUT)
        h1.append(vec_add([max(x, 0.0) for x in lin], h0[i]))

    z = [vec_add(mat_vec(h, TOY_W_PROJ), TOY_B_PROJ) for h in h1]
    adj_recon = [[sigmoid(dot(z[i], z[j])) for j in range(2)] for i in range(2)]
    attrs_recon = [
        [max(x, 0.0) for x in vec_add(mat_vec(z[i], TOY_W_DEC), TOY_B_DEC[i])]
        for i in range(2)
    ]
    ntype_recon = [[1.0], [1.0]]  # single type: one-coordinate softmax

    adj = [[0.0, 1.0], [0.0, 0.0]]
    scores = []
    for v in range(2):
        r_struct = (math.sqrt(sum((adj[v][j] - adj_recon[v][j]) ** 2 for j in range(2)))
                    + math.sqrt(sum((adj[i][v] - adj_recon[i][v]) ** 2 for i in range(2))))
        r_attr = math.sqrt(sum((TOY_X[v][d] - attrs_recon[v][d]) ** 2 for d in range(2)))
        r_type = math.sqrt((1.0 - ntype_recon[v][0]) ** 2)
        scores.append(0.4 * r_struct + 0.4 * r_attr + 0.2 * r_type)

    return {
        "h0": h0,
        "h1": h1,
        "z": z,
        "raw_scores": {"r": raw_fwd, "r__rev": raw_rev},
        "adj_recon": adj_recon,
        "attrs_recon": attrs_recon,
        "ntype_recon": ntype_recon,
        "scores": scores,
    }
