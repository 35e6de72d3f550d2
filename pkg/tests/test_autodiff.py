import numpy as np

from hetgad import autodiff as ad


def fd_gradient(fn, x, step=1e-6):
    """Central finite differences of a scalar function of one array."""
    g = np.zeros_like(x)
    for i in range(x.size):
        xp = x.copy()
        xp.flat[i] += step
        xm = x.copy()
        xm.flat[i] -= step
        g.flat[i] = (fn(xp) - fn(xm)) / (2 * step)
    return g


def grad_matches(build, shapes, seed=0, tol=2e-6):
    rng = np.random.default_rng(seed)
    arrays = [rng.normal(0.4, 1.0, size=s) for s in shapes]
    weight = rng.normal(size=build(*[ad.constant(a) for a in arrays]).shape) + 0.3

    def scalar(*xs):
        o = build(*[ad.constant(x) for x in xs])
        return float((o.data * weight).sum())

    tensors = [ad.parameter(a) for a in arrays]
    out = build(*tensors)
    loss = ad.tensor_sum(ad.mul(out, ad.constant(weight)))
    loss.backward()
    for k, t in enumerate(tensors):
        def fn(x, k=k):
            args = list(arrays)
            args[k] = x
            return scalar(*args)

        fd = fd_gradient(fn, arrays[k])
        an = np.zeros_like(arrays[k]) if t.grad is None else t.grad
        assert np.allclose(an, fd, atol=tol), f"input {k}: {an} vs {fd}"


def test_add_broadcast_grad():
    grad_matches(lambda a, b: ad.add(a, b), [(3, 4), (4,)])
    grad_matches(lambda a, b: ad.add(a, b), [(3, 4), (3, 4)])


def test_sub_mul_grad():
    grad_matches(lambda a, b: ad.sub(a, b), [(3, 4), (3, 4)])
    grad_matches(lambda a, b: ad.mul(a, b), [(3, 4), (3, 4)])
    grad_matches(lambda a, b: ad.mul(a, b), [(5, 2), (5, 1)])


def test_matmul_transpose_reshape_grad():
    grad_matches(lambda a, b: ad.matmul(a, b), [(3, 4), (4, 2)])
    grad_matches(lambda a: ad.transpose(a), [(3, 4)])
    grad_matches(lambda a: ad.reshape(a, (6, 2)), [(3, 4)])


def test_elementwise_grad():
    grad_matches(lambda a: ad.relu(a), [(4, 3)])
    grad_matches(lambda a: ad.sigmoid(a), [(4, 3)])
    grad_matches(lambda a: ad.square(a), [(4, 3)])
    rng = np.random.default_rng(1)
    x = rng.uniform(0.5, 2.0, size=(3, 3))
    t = ad.parameter(x)
    loss = ad.tensor_sum(ad.sqrt(t))
    loss.backward()
    assert np.allclose(t.grad, 0.5 / np.sqrt(x))


def test_sum_axis_grad():
    grad_matches(lambda a: ad.tensor_sum(a, axis=1), [(4, 3)])
    grad_matches(lambda a: ad.tensor_sum(a, axis=0, keepdims=True), [(4, 3)])


def test_concat_gather_grad():
    grad_matches(lambda a, b: ad.concat([a, b], axis=0), [(3, 2), (4, 2)])
    grad_matches(lambda a, b: ad.concat([a, b], axis=1), [(3, 2), (3, 4)])
    idx = np.array([0, 2, 2, 1, 0])
    grad_matches(lambda a: ad.gather_rows(a, idx), [(3, 4)])


def test_segment_ops_match_bruteforce():
    rng = np.random.default_rng(2)
    x = rng.normal(size=(7, 3))
    seg = np.array([0, 2, 2, 1, 0, 2, 1])
    out = ad.segment_sum(ad.constant(x), seg, 4).data
    expect = np.zeros((4, 3))
    for row, s in zip(x, seg):
        expect[s] += row
    assert np.allclose(out, expect)

    scores = rng.normal(size=7)
    soft = ad.segment_softmax(ad.constant(scores), seg, 4).data
    for s in (0, 1, 2):
        mask = seg == s
        ex = np.exp(scores[mask] - scores[mask].max())
        assert np.allclose(soft[mask], ex / ex.sum())
    assert np.allclose([soft[seg == s].sum() for s in (0, 1, 2)], 1.0)


def test_segment_ops_grad():
    seg = np.array([0, 2, 2, 1, 0, 2, 1])
    grad_matches(lambda a: ad.segment_sum(a, seg, 3), [(7, 2)])
    grad_matches(lambda a: ad.segment_softmax(a, seg, 3), [(7,)])


def test_scatter_plan_matches_add_at():
    rng = np.random.default_rng(3)
    idx = rng.integers(0, 5, size=20)
    vals = rng.normal(size=(20, 4))
    plan = ad.ScatterPlan(idx, 5)
    expect = np.zeros((5, 4))
    np.add.at(expect, idx, vals)
    assert np.allclose(plan.scatter_add(vals), expect)

    mx = np.full(5, -np.inf)
    np.maximum.at(mx, idx, vals[:, 0])
    assert np.allclose(plan.scatter_max(vals[:, 0], -np.inf), mx)

    # planned ops agree with unplanned ops, values and gradients
    seg = idx
    a1 = ad.parameter(vals)
    a2 = ad.parameter(vals.copy())
    w = rng.normal(size=(5, 4))
    l1 = ad.tensor_sum(ad.mul(ad.segment_sum(a1, seg, 5), ad.constant(w)))
    l2 = ad.tensor_sum(ad.mul(ad.segment_sum(a2, seg, 5, plan=plan), ad.constant(w)))
    l1.backward()
    l2.backward()
    assert np.allclose(l1.data, l2.data)
    assert np.allclose(a1.grad, a2.grad)


def test_softmax_ops_grad():
    grad_matches(lambda a: ad.softmax_vec(a), [(6,)])
    grad_matches(lambda a: ad.softmax_rows(a), [(4, 3)])


def test_pick_grad():
    grad_matches(lambda a: ad.mul(ad.pick(a, (1, 2)), ad.constant(np.ones(5))),
                 [(3, 4)])


def test_reuse_accumulates():
    # a appears twice; gradients from both paths must add up
    a = ad.parameter(np.array([1.0, 2.0]))
    out = ad.add(ad.mul(a, a), a)  # a^2 + a  -> grad 2a + 1
    ad.tensor_sum(out).backward()
    assert np.allclose(a.grad, 2 * a.data + 1)


def test_constant_tensors_skip_tape():
    c = ad.constant(np.ones(3))
    out = ad.mul(c, c)
    assert not out.requires_grad
    out.backward()  # no-op
    assert c.grad is None


def test_operator_sugar():
    a = ad.parameter(np.array([2.0]))
    out = (-a) * 3.0 + 1.0 - a
    out.backward(np.ones(1))
    assert np.allclose(out.data, -7.0)
    assert np.allclose(a.grad, -4.0)
