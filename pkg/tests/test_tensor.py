import numpy as np
import pytest

from signforge import tensor as tz


def _scalarize(out, proj):
    return tz.mean(tz.multiply(out, tz.constant(proj, dtype=np.float64)))


def analytic_and_fd(build, inputs, h=1e-3):
    """Gradient of a scalarized op output, analytically and by central differences."""
    tensors = [tz.parameter(np.array(v, dtype=np.float64), dtype=np.float64) for v in inputs]
    with tz.Tape():
        loss = build(tensors)
        tz.backward(loss)
    analytic = [
        t.grad.copy() if t.grad is not None else np.zeros_like(t.values) for t in tensors
    ]

    def value():
        return float(build([tz.constant(t.values, dtype=np.float64) for t in tensors]).values)

    fd = []
    for t in tensors:
        g = np.zeros_like(t.values)
        flat = t.values.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            fp = value()
            flat[i] = orig - h
            fm = value()
            flat[i] = orig
            gflat[i] = (fp - fm) / (2 * h)
        fd.append(g)
    return analytic, fd


def assert_close(analytic, fd, tol=1e-3):
    for a, f in zip(analytic, fd):
        err = np.abs(a - f) / np.maximum(1.0, np.maximum(np.abs(a), np.abs(f)))
        assert err.max() < tol, f"gradient mismatch {err.max():.2e}"


OPERATOR_CASES = {}


def case(name):
    def wrap(fn):
        OPERATOR_CASES[name] = fn
        return fn
    return wrap


@case("add")
def _add_case(rng):
    proj = rng.standard_normal((3, 4))
    return (lambda ts: _scalarize(tz.add(ts[0], ts[1]), proj),
            [rng.standard_normal((3, 4)), rng.standard_normal((3, 4))])


@case("add_bias")
def _add_bias_case(rng):
    proj = rng.standard_normal((3, 4))
    return (lambda ts: _scalarize(tz.add(ts[0], ts[1]), proj),
            [rng.standard_normal((3, 4)), rng.standard_normal(4)])


@case("multiply")
def _mul_case(rng):
    proj = rng.standard_normal((3, 4))
    return (lambda ts: _scalarize(tz.multiply(ts[0], ts[1]), proj),
            [rng.standard_normal((3, 4)), rng.standard_normal((3, 4))])


@case("scale")
def _scale_case(rng):
    proj = rng.standard_normal((3, 4))
    return (lambda ts: _scalarize(tz.scale(ts[0], 1.7), proj), [rng.standard_normal((3, 4))])


@case("matmul")
def _matmul_case(rng):
    proj = rng.standard_normal((3, 4))
    return (lambda ts: _scalarize(tz.matmul(ts[0], ts[1]), proj),
            [rng.standard_normal((3, 5)), rng.standard_normal((5, 4))])


@case("matmul_tb")
def _matmul_tb_case(rng):
    proj = rng.standard_normal((3, 4))
    return (lambda ts: _scalarize(tz.matmul(ts[0], ts[1], transpose_b=True), proj),
            [rng.standard_normal((3, 5)), rng.standard_normal((4, 5))])


@case("softmax")
def _softmax_case(rng):
    proj = rng.standard_normal((3, 4))
    return (lambda ts: _scalarize(tz.softmax(ts[0]), proj), [rng.standard_normal((3, 4))])


@case("relu")
def _relu_case(rng):
    proj = rng.standard_normal((3, 4))
    values = rng.standard_normal((3, 4))
    values = np.where(np.abs(values) < 0.05, 0.3, values)  # keep clear of the kink
    return (lambda ts: _scalarize(tz.relu(ts[0]), proj), [values])


@case("layer_norm")
def _ln_case(rng):
    proj = rng.standard_normal((3, 4))
    return (lambda ts: _scalarize(tz.layer_norm(ts[0], ts[1], ts[2]), proj),
            [rng.standard_normal((3, 4)), rng.standard_normal(4), rng.standard_normal(4)])


@case("embedding_lookup")
def _embed_case(rng):
    proj = rng.standard_normal((3, 4))
    ids = rng.integers(0, 6, 3)
    return (lambda ts: _scalarize(tz.embedding_lookup(ts[0], ids), proj),
            [rng.standard_normal((6, 4))])


@case("concat")
def _concat_case(rng):
    proj = rng.standard_normal((5, 4))
    return (lambda ts: _scalarize(tz.concat([ts[0], ts[1]], axis=0), proj),
            [rng.standard_normal((2, 4)), rng.standard_normal((3, 4))])


@case("slice")
def _slice_case(rng):
    proj = rng.standard_normal((3, 2))
    key = (slice(None), slice(1, 3))
    return (lambda ts: _scalarize(tz.slice_(ts[0], key), proj), [rng.standard_normal((3, 4))])


@case("mean")
def _mean_case(rng):
    return (lambda ts: tz.mean(ts[0]), [rng.standard_normal((3, 4))])


@case("mse")
def _mse_case(rng):
    target = rng.standard_normal((3, 4))
    return (lambda ts: tz.mse(ts[0], tz.constant(target, dtype=np.float64)),
            [rng.standard_normal((3, 4))])


@case("cross_entropy")
def _ce_case(rng):
    ids = rng.integers(0, 6, 4)
    return (lambda ts: tz.cross_entropy(ts[0], ids), [rng.standard_normal((4, 6))])


@pytest.mark.parametrize("name", sorted(OPERATOR_CASES))
def test_operator_gradients(name):
    # a couple of seeds per operator here; the acceptance suite runs 100+
    for seed in (0, 1, 2):
        rng = np.random.default_rng(seed)
        build, inputs = OPERATOR_CASES[name](rng)
        analytic, fd = analytic_and_fd(build, inputs)
        assert_close(analytic, fd)


def composite_case(rng):
    """Randomly wired 3-operator chain ending in a scalar."""
    d = int(rng.integers(2, 5))
    rows = int(rng.integers(2, 5))
    proj = rng.standard_normal((rows, d))
    unary = [
        lambda t: tz.relu(t),
        lambda t: tz.softmax(t),
        lambda t: tz.scale(t, 1.3),
    ]
    first = unary[int(rng.integers(len(unary)))]
    second = unary[int(rng.integers(len(unary)))]

    def build(ts):
        x = tz.add(ts[0], ts[1])
        return _scalarize(second(first(x)), proj)

    values = rng.standard_normal((rows, d))
    values = np.where(np.abs(values) < 0.05, 0.4, values)
    bias = rng.standard_normal((rows, d))
    bias = np.where(np.abs(bias) < 0.05, -0.4, bias)
    return build, [values, bias]


def test_composite_gradients():
    for seed in range(5):
        rng = np.random.default_rng(100 + seed)
        build, inputs = composite_case(rng)
        analytic, fd = analytic_and_fd(build, inputs)
        assert_close(analytic, fd)


def test_matmul_identity():
    m = tz.constant(np.array([[1.0, 2.0], [3.0, 4.0]]))
    out = tz.matmul(m, tz.constant(np.eye(2, dtype=np.float32)))
    assert np.allclose(out.values, m.values)


def test_softmax_symmetry_and_sum(rng):
    out = tz.softmax(tz.constant(np.array([[0.0, 0.0]])))
    assert np.allclose(out.values, [[0.5, 0.5]])
    z = tz.softmax(tz.constant(rng.standard_normal((5, 7)).astype(np.float32)))
    assert np.all(z.values > 0)
    assert np.allclose(z.values.sum(axis=-1), 1.0, atol=1e-6)


def test_mse_zero_on_equal(rng):
    y = tz.constant(rng.standard_normal((3, 4)))
    assert float(tz.mse(y, y).values) == 0.0


def test_shape_mismatch_names_shapes():
    with pytest.raises(tz.ShapeMismatch) as info:
        tz.add(tz.constant(np.zeros((2, 3))), tz.constant(np.zeros((3, 2))))
    assert "(2, 3)" in str(info.value) and "(3, 2)" in str(info.value)


def test_backward_simple_linear():
    w = tz.parameter(np.array([[0.5]]), dtype=np.float64)
    x = tz.constant(np.array([[2.0]]), dtype=np.float64)
    y = tz.constant(np.array([[3.0]]), dtype=np.float64)
    with tz.Tape():
        loss = tz.mse(tz.matmul(x, w), y)
        tz.backward(loss)
    assert w.grad[0, 0] == pytest.approx(2 * (0.5 * 2 - 3) * 2)


def test_backward_requires_scalar():
    v = tz.parameter(np.zeros((2, 2)))
    with tz.Tape():
        out = tz.scale(v, 2.0)
        with pytest.raises(tz.NonScalarLoss):
            tz.backward(out)


def test_double_backward_raises():
    w = tz.parameter(np.ones((2, 2)))
    with tz.Tape():
        loss = tz.mean(tz.scale(w, 3.0))
        tz.backward(loss)
        with pytest.raises(tz.DoubleBackward):
            tz.backward(loss)


def test_constant_loss_leaves_grads_zero():
    w = tz.parameter(np.ones((2, 2)))
    with tz.Tape():
        loss = tz.mse(tz.scale(w, 0.0), tz.constant(np.zeros((2, 2))))
        tz.backward(loss)
    assert np.all(w.grad == 0.0)


def test_fanout_accumulates():
    w = tz.parameter(np.array([[1.0, 2.0]]), dtype=np.float64)
    with tz.Tape():
        a = tz.scale(w, 2.0)
        b = tz.scale(w, 3.0)
        loss = tz.mean(tz.add(a, b))
        tz.backward(loss)
    assert np.allclose(w.grad, (2.0 + 3.0) / 2)


def test_sgd_step():
    p = tz.parameter(np.array([1.0]))
    p.grad = np.array([2.0], dtype=np.float32)
    tz.sgd_step([p], lr=0.5)
    assert p.values[0] == pytest.approx(0.0)
    assert p.grad is None


def test_sgd_zero_grad_no_change():
    p = tz.parameter(np.array([1.5]))
    p.grad = np.zeros(1, dtype=np.float32)
    tz.sgd_step([p], 0.1)
    assert p.values[0] == pytest.approx(1.5)


def test_sgd_two_steps_sum():
    p = tz.parameter(np.array([1.0]))
    p.grad = np.array([2.0], dtype=np.float32)
    tz.sgd_step([p], 0.1)
    p.grad = np.array([2.0], dtype=np.float32)
    tz.sgd_step([p], 0.1)
    q = tz.parameter(np.array([1.0]))
    q.grad = np.array([4.0], dtype=np.float32)
    tz.sgd_step([q], 0.1)
    assert p.values[0] == pytest.approx(q.values[0])


def test_sgd_requires_positive_lr():
    with pytest.raises(ValueError):
        tz.sgd_step([], 0.0)


def test_no_recording_outside_tape():
    w = tz.parameter(np.ones((2, 2)))
    out = tz.scale(w, 2.0)
    assert out._tape is None
    assert not out.requires_grad


def test_forward_determinism(rng):
    values = rng.standard_normal((4, 4)).astype(np.float32)
    a = tz.softmax(tz.constant(values)).values
    b = tz.softmax(tz.constant(values)).values
    assert np.array_equal(a, b)
