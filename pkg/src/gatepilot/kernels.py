"""Hot elementwise kernels, numba-jitted with a pure-numpy fallback.

The heavy matrix products go through BLAS either way; what lives here are
the fused elementwise passes that otherwise cost numpy several temporaries
per call (activation backprop, Adam moment updates, Polyak blending).

Backend selection happens once at import time from the environment:

    GATEPILOT_BACKEND=numba   force the jitted kernels (error if unavailable)
    GATEPILOT_BACKEND=numpy   force the vectorized numpy fallback
    unset                     numba when importable, numpy otherwise

Both backends compute the same arithmetic in the same order, so results
agree to floating-point rounding (bit-exact except for tanh).
"""

import os

import numpy as np

KERNEL_NAMES = ("relu_vjp", "tanh_vjp", "adam_update", "polyak_blend")


# ---------------------------------------------------------------------------
# numpy fallback

def _np_relu_vjp(z, g):
    return np.where(z > 0.0, g, 0.0)


def _np_tanh_vjp(y, g):
    # y is the tanh output, not the pre-activation
    return g * (1.0 - y * y)


def _np_adam_update(p, g, m, v, lr, beta1, beta2, eps, bc1, bc2):
    m[...] = beta1 * m + (1.0 - beta1) * g
    v[...] = beta2 * v + (1.0 - beta2) * (g * g)
    p[...] = p - (lr * (m / bc1)) / (np.sqrt(v / bc2) + eps)


def _np_polyak_blend(target, main, rho):
    target[...] = rho * target + (1.0 - rho) * main


_NUMPY_KERNELS = {
    "relu_vjp": _np_relu_vjp,
    "tanh_vjp": _np_tanh_vjp,
    "adam_update": _np_adam_update,
    "polyak_blend": _np_polyak_blend,
}


# ---------------------------------------------------------------------------
# numba backend

def _build_numba_kernels():
    from numba import njit

    @njit(cache=True)
    def _relu_vjp_flat(z, g, out):
        for i in range(z.size):
            out[i] = g[i] if z[i] > 0.0 else 0.0

    @njit(cache=True)
    def _tanh_vjp_flat(y, g, out):
        for i in range(y.size):
            out[i] = g[i] * (1.0 - y[i] * y[i])

    @njit(cache=True)
    def _adam_flat(p, g, m, v, lr, beta1, beta2, eps, bc1, bc2):
        for i in range(p.size):
            mi = beta1 * m[i] + (1.0 - beta1) * g[i]
            vi = beta2 * v[i] + (1.0 - beta2) * (g[i] * g[i])
            m[i] = mi
            v[i] = vi
            p[i] = p[i] - (lr * (mi / bc1)) / (np.sqrt(vi / bc2) + eps)

    @njit(cache=True)
    def _polyak_flat(target, main, rho):
        for i in range(target.size):
            target[i] = rho * target[i] + (1.0 - rho) * main[i]

    def relu_vjp(z, g):
        out = np.empty_like(g)
        _relu_vjp_flat(z.ravel(), g.ravel(), out.ravel())
        return out

    def tanh_vjp(y, g):
        out = np.empty_like(g)
        _tanh_vjp_flat(y.ravel(), g.ravel(), out.ravel())
        return out

    def adam_update(p, g, m, v, lr, beta1, beta2, eps, bc1, bc2):
        _adam_flat(p.ravel(), g.ravel(), m.ravel(), v.ravel(),
                   lr, beta1, beta2, eps, bc1, bc2)

    def polyak_blend(target, main, rho):
        _polyak_flat(target.ravel(), main.ravel(), rho)

    return {
        "relu_vjp": relu_vjp,
        "tanh_vjp": tanh_vjp,
        "adam_update": adam_update,
        "polyak_blend": polyak_blend,
    }


def _numba_available():
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def available_backends():
    """Names of the backends importable in this process."""
    names = ["numpy"]
    if _numba_available():
        names.append("numba")
    return names


def get_backend(name):
    """Return the kernel table for a named backend (for tests/benchmarks)."""
    if name == "numpy":
        return dict(_NUMPY_KERNELS)
    if name == "numba":
        if not _numba_available():
            raise ImportError("numba backend requested but numba is not installed")
        return _build_numba_kernels()
    raise ValueError(f"unknown kernel backend {name!r} (expected 'numpy' or 'numba')")


def _select_backend():
    requested = os.environ.get("GATEPILOT_BACKEND", "").strip().lower()
    if requested == "":
        return "numba" if _numba_available() else "numpy"
    if requested in ("numpy", "numba"):
        return requested
    raise ValueError(
        f"GATEPILOT_BACKEND={requested!r} not recognized (use 'numpy' or 'numba')"
    )


BACKEND = _select_backend()
_ACTIVE = get_backend(BACKEND)

relu_vjp = _ACTIVE["relu_vjp"]
tanh_vjp = _ACTIVE["tanh_vjp"]
adam_update = _ACTIVE["adam_update"]
polyak_blend = _ACTIVE["polyak_blend"]
