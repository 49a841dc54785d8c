import numpy as np
import pytest

from skymimic.nn import (AdamaxState, DimensionError, ParamSet, adamax_update,
                         affine, affine_backward, grad_check, lstm_backward,
                         lstm_forward, lstm_init, lstm_step, mlp_backward,
                         mlp_forward, mlp_init, softmax, uniform_init)


def test_affine_identity():
    y = affine(np.array([1.0, 0.0]), np.eye(2), np.zeros(2))
    assert np.allclose(y, [1.0, 0.0])


def test_affine_forced():
    y = affine(np.array([1.0, 2.0]), np.array([[1.0], [1.0]]),
               np.array([3.0]))
    assert np.allclose(y, [6.0])


def test_affine_shape_error_names_shapes():
    with pytest.raises(DimensionError, match=r"\(3,\).*\(2, 1\)"):
        affine(np.zeros(3), np.zeros((2, 1)), np.zeros(1))


def test_affine_gradients_vs_finite_differences():
    rng = np.random.default_rng(7)
    R = rng.normal(size=(3, 4))  # fixed projection to a scalar
    p = ParamSet({
        "x": rng.normal(size=(3, 2)),
        "W": rng.normal(size=(2, 4)),
        "b": rng.normal(size=4),
    })

    def f(ps):
        y = affine(ps["x"], ps["W"], ps["b"])
        g = ps.zeros_like()
        dx, dW, db = affine_backward(R, ps["x"], ps["W"])
        g["x"], g["W"], g["b"] = dx, dW, db
        return float(np.sum(y * R)), g

    assert grad_check(f, p, eps=1e-5) <= 1e-6


def test_lstm_zero_everything():
    p = ParamSet({"Wx": np.zeros((3, 8)), "Wh": np.zeros((2, 8)),
                  "b": np.zeros(8)})
    h, c, _ = lstm_step(np.zeros(3), np.zeros(2), np.zeros(2), p)
    assert np.allclose(h, 0) and np.allclose(c, 0)


def test_lstm_purity():
    rng = np.random.default_rng(3)
    p = lstm_init(rng, 3, 4)
    x, h, c = rng.normal(size=3), rng.normal(size=4), rng.normal(size=4)
    h1, c1, _ = lstm_step(x, h, c, p)
    h2, c2, _ = lstm_step(x, h, c, p)
    assert np.array_equal(h1, h2) and np.array_equal(c1, c2)


def test_lstm_shape_error():
    p = lstm_init(np.random.default_rng(0), 3, 4)
    with pytest.raises(DimensionError):
        lstm_step(np.zeros(5), np.zeros(4), np.zeros(4), p)


def test_lstm_bptt_vs_finite_differences():
    rng = np.random.default_rng(11)
    p = lstm_init(rng, 3, 4)
    xs = rng.normal(size=(3, 3))
    R = rng.normal(size=(3, 4))

    def f(ps):
        hs, _, _, caches = lstm_forward(xs, ps)
        loss = float(np.sum(hs * R))
        g = ps.zeros_like()
        lstm_backward(list(R), caches, ps, g)
        return loss, g

    assert grad_check(f, p, eps=1e-5) <= 1e-5


@pytest.mark.parametrize("seed", range(20))
def test_layer_gradients_randomized(seed):
    """Per-layer analytic gradients match finite differences, 20 seeds."""
    rng = np.random.default_rng(1000 + seed)
    p = lstm_init(rng, 2, 3)
    for k in ("W0", "b0", "W1", "b1"):
        pass
    mlp = mlp_init(rng, [3, 4, 2], prefix="m_")
    for k, v in mlp.items():
        p[k] = v
    xs = rng.normal(size=(4, 2))
    R = rng.normal(size=2)

    def f(ps):
        hs, h, c, caches = lstm_forward(xs, ps)
        y, acts = mlp_forward(h, ps, 2, prefix="m_")
        loss = float(np.sum(y * R))
        g = ps.zeros_like()
        dh = mlp_backward(R, acts, ps, 2, g, prefix="m_")
        lstm_backward(None, caches, ps, g, dh_final=dh)
        return loss, g

    assert grad_check(f, p, eps=1e-5) <= 1e-4


def test_softmax_uniform():
    assert np.allclose(softmax(np.zeros(5)), 0.2)


def test_softmax_forced():
    out = softmax(np.array([np.log(2.0), 0.0]))
    assert np.allclose(out, [2 / 3, 1 / 3])


def test_softmax_no_overflow():
    out = softmax(np.array([1000.0, 0.0]))
    assert np.isfinite(out).all()
    assert out[0] > 0.999999 and out[1] < 1e-6


def test_softmax_simplex_and_shift_invariance():
    rng = np.random.default_rng(5)
    for _ in range(50):
        z = rng.normal(scale=50, size=rng.integers(1, 9))
        s = softmax(z)
        assert np.all(s >= 0)
        assert abs(s.sum() - 1.0) <= 1e-12
        assert np.allclose(s, softmax(z + 13.7), atol=1e-12)


def test_softmax_empty():
    with pytest.raises(ValueError):
        softmax(np.zeros(0))


def test_adamax_zero_gradient_is_noop():
    p = ParamSet({"w": np.array([1.0, -2.0])})
    st = AdamaxState(p)
    adamax_update(p, p.zeros_like(), st)
    assert np.allclose(p["w"], [1.0, -2.0])
    assert st.step == 1


def test_adamax_single_step_magnitude():
    # constant gradient g: first step moves by exactly lr in magnitude
    p = ParamSet({"w": np.array([0.0])})
    st = AdamaxState(p, lr=0.001)
    g = ParamSet({"w": np.array([2.5])})
    adamax_update(p, g, st)
    assert abs(abs(p["w"][0]) - 0.001) <= 1e-9


def test_adamax_quadratic_bowl():
    # lr 0.01: at the training default 0.001 the step magnitude caps
    # total travel at 0.5 over 500 steps, short of the bowl minimum
    p = ParamSet({"w": np.array([1.0])})
    st = AdamaxState(p, lr=0.01)
    for _ in range(500):
        g = ParamSet({"w": 2.0 * p["w"]})
        adamax_update(p, g, st)
    assert abs(p["w"][0]) < 0.05


def test_adamax_infinity_norm_nondecreasing():
    rng = np.random.default_rng(9)
    p = ParamSet({"w": rng.normal(size=4)})
    st = AdamaxState(p)
    prev = st.u["w"].copy()
    for _ in range(100):
        adamax_update(p, ParamSet({"w": rng.normal(size=4)}), st)
        assert np.all(st.u["w"] >= prev * st.beta2 - 1e-15)
        assert np.all(st.u["w"] >= 0)
        prev = st.u["w"].copy()


def test_adamax_shape_mismatch():
    p = ParamSet({"w": np.zeros(3)})
    st = AdamaxState(p)
    with pytest.raises(DimensionError):
        adamax_update(p, ParamSet({"w": np.zeros(2)}), st)


def test_grad_check_sum_of_squares():
    p = ParamSet({"a": np.array([1.0, -2.0, 3.0]), "b": np.array([[0.5]])})

    def f(ps):
        loss = sum(float(np.sum(v ** 2)) for v in ps.values())
        g = ParamSet({k: 2.0 * v for k, v in ps.items()})
        return loss, g

    assert grad_check(f, p, eps=1e-5) <= 1e-8


def test_paramset_serialization_roundtrip(tmp_path):
    rng = np.random.default_rng(2)
    p = ParamSet({"Wx": rng.normal(size=(3, 8)), "b": rng.normal(size=8),
                  "scalarish": rng.normal(size=(1,))},
                 meta={"channel": "fg"})
    path = tmp_path / "params.bin"
    p.save(path)
    q = ParamSet.load(path)
    assert list(q.keys()) == list(p.keys())
    for k in p:
        assert q[k].tobytes() == p[k].tobytes()
    assert q.meta == {"channel": "fg"}
    # saving again is byte-identical
    p.save(tmp_path / "params2.bin")
    assert (tmp_path / "params.bin").read_bytes() == \
        (tmp_path / "params2.bin").read_bytes()


def test_uniform_init_bounds_and_determinism():
    a = uniform_init(np.random.default_rng(4), 16, (100,))
    b = uniform_init(np.random.default_rng(4), 16, (100,))
    assert np.array_equal(a, b)
    assert np.all(np.abs(a) <= 0.25)
