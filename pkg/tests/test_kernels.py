"""Kernel backends: correctness of each op and numpy/numba agreement."""

import numpy as np
import pytest

from gatepilot import kernels

BACKENDS = kernels.available_backends()


@pytest.fixture(params=BACKENDS)
def table(request):
    return kernels.get_backend(request.param)


def test_relu_vjp_masks_nonpositive(table):
    z = np.array([-1.0, 0.0, 2.0, -0.5, 3.0])
    g = np.full(5, 10.0)
    out = table["relu_vjp"](z, g)
    assert np.array_equal(out, [0.0, 0.0, 10.0, 0.0, 10.0])


def test_relu_vjp_leaves_inputs_alone(table):
    rng = np.random.default_rng(0)
    z = rng.normal(size=(7, 3))
    g = rng.normal(size=(7, 3))
    z0, g0 = z.copy(), g.copy()
    table["relu_vjp"](z, g)
    assert np.array_equal(z, z0) and np.array_equal(g, g0)


def test_tanh_vjp_matches_derivative(table):
    rng = np.random.default_rng(1)
    z = rng.normal(size=200)
    y = np.tanh(z)
    g = rng.normal(size=200)
    out = table["tanh_vjp"](y, g)
    # compare against a central difference of tanh itself
    h = 1e-6
    dtanh = (np.tanh(z + h) - np.tanh(z - h)) / (2 * h)
    assert np.allclose(out, g * dtanh, rtol=1e-8, atol=1e-10)


def test_adam_first_step_is_bias_corrected(table):
    p = np.zeros(1)
    g = np.ones(1)
    m = np.zeros(1)
    v = np.zeros(1)
    # t=1: m_hat = v_hat = 1, so the step is -lr/(1+eps)
    table["adam_update"](p, g, m, v, 0.1, 0.9, 0.999, 1e-8, 1 - 0.9, 1 - 0.999)
    assert abs(p[0] + 0.1) < 1e-7
    assert m[0] == pytest.approx(0.1)
    assert v[0] == pytest.approx(0.001)


def test_adam_zero_gradient_keeps_parameters(table):
    rng = np.random.default_rng(2)
    p = rng.normal(size=16)
    p0 = p.copy()
    m = np.zeros(16)
    v = np.zeros(16)
    table["adam_update"](p, np.zeros(16), m, v, 0.1, 0.9, 0.999, 1e-8, 0.1, 0.001)
    assert np.array_equal(p, p0)


def test_adam_sign_symmetry(table):
    rng = np.random.default_rng(3)
    g = rng.normal(size=32)
    p1, p2 = np.zeros(32), np.zeros(32)
    st = lambda: (np.zeros(32), np.zeros(32))
    m1, v1 = st()
    m2, v2 = st()
    args = (0.05, 0.9, 0.999, 1e-8, 0.1, 0.001)
    table["adam_update"](p1, g, m1, v1, *args)
    table["adam_update"](p2, -g, m2, v2, *args)
    assert np.allclose(p1, -p2, rtol=0, atol=1e-15)


def test_polyak_blend_endpoints(table):
    t = np.ones(8)
    m = np.zeros(8)
    table["polyak_blend"](t, m, 1.0)
    assert np.array_equal(t, np.ones(8))
    table["polyak_blend"](t, m, 0.0)
    assert np.array_equal(t, np.zeros(8))


def test_polyak_blend_hand_value(table):
    t = np.ones(3)
    table["polyak_blend"](t, np.zeros(3), 0.999)
    assert np.array_equal(t, np.full(3, 0.999))


def test_polyak_repeated_blend_converges(table):
    rng = np.random.default_rng(4)
    t = rng.normal(size=64)
    m = rng.normal(size=64)
    for _ in range(20000):
        table["polyak_blend"](t, m, 0.99)
    assert np.allclose(t, m, rtol=0, atol=1e-10)


@pytest.mark.skipif(len(BACKENDS) < 2, reason="numba not installed")
def test_backends_agree_bitwise():
    """Both backends use the same op order, so results match bit for bit."""
    rng = np.random.default_rng(5)
    nb = kernels.get_backend("numba")
    npk = kernels.get_backend("numpy")

    z = rng.normal(size=(100, 40))
    g = rng.normal(size=(100, 40))
    assert np.array_equal(nb["relu_vjp"](z, g), npk["relu_vjp"](z, g))
    y = np.tanh(z)
    assert np.array_equal(nb["tanh_vjp"](y, g), npk["tanh_vjp"](y, g))

    p1 = rng.normal(size=400)
    p2 = p1.copy()
    grad = rng.normal(size=400)
    m1, v1 = np.zeros(400), np.zeros(400)
    m2, v2 = np.zeros(400), np.zeros(400)
    args = (1e-3, 0.9, 0.999, 1e-8, 0.1, 0.001)
    nb["adam_update"](p1, grad, m1, v1, *args)
    npk["adam_update"](p2, grad, m2, v2, *args)
    assert np.array_equal(p1, p2)
    assert np.array_equal(m1, m2)
    assert np.array_equal(v1, v2)

    t1 = rng.normal(size=301)
    t2 = t1.copy()
    main = rng.normal(size=301)
    nb["polyak_blend"](t1, main, 0.999)
    npk["polyak_blend"](t2, main, 0.999)
    assert np.array_equal(t1, t2)


def test_get_backend_rejects_unknown():
    with pytest.raises(ValueError):
        kernels.get_backend("cuda")


def test_active_backend_is_listed():
    assert kernels.BACKEND in kernels.available_backends()
    for name in kernels.KERNEL_NAMES:
        assert callable(getattr(kernels, name))
