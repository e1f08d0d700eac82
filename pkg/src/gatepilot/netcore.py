"""Dense networks with hand-rolled reverse-mode gradients.

Small fixed-topology MLPs in double precision: affine layers with relu,
tanh, or linear activations, Glorot-normal initialization, exact
backprop for both parameters and inputs, and in-place Adam/SGD updates.
The elementwise hot spots route through the kernels module so the numba
and numpy backends share one code path here.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels

ACTIVATIONS = ("relu", "tanh", "linear")

ACTOR_DIMS = (8, 400, 300, 4)
ACTOR_ACTS = ("relu", "relu", "tanh")
CRITIC_DIMS = (12, 400, 300, 1)
CRITIC_ACTS = ("relu", "relu", "linear")
ACTOR_OUT_SCALE = 1e-3  # final actor layer starts near zero on purpose


@dataclass
class Layer:
    """One affine stage: weights (out, in), biases (out,), activation tag."""

    w: np.ndarray
    b: np.ndarray
    act: str


@dataclass
class Mlp:
    layers: list

    @property
    def in_dim(self):
        return self.layers[0].w.shape[1]

    @property
    def out_dim(self):
        return self.layers[-1].w.shape[0]


def glorot_std(fan_in, fan_out):
    return math.sqrt(2.0 / (fan_in + fan_out))


def init_mlp(rng, dims, acts, out_uniform=None, glorot_biases=False):
    """Build an MLP, drawing weights layer by layer (weights, then biases).

    ``out_uniform`` switches the final layer to U[-s, s] for both weights
    and biases. Hidden biases start at zero unless ``glorot_biases``.
    """
    if len(acts) != len(dims) - 1:
        raise ValueError("need one activation per layer")
    for act in acts:
        if act not in ACTIVATIONS:
            raise ValueError(f"unknown activation {act!r}")
    layers = []
    last = len(dims) - 2
    for i, (n_in, n_out, act) in enumerate(zip(dims[:-1], dims[1:], acts)):
        if i == last and out_uniform is not None:
            s = out_uniform
            w = rng.uniform(-s, s, size=(n_out, n_in))
            b = rng.uniform(-s, s, size=n_out)
        else:
            std = glorot_std(n_in, n_out)
            w = rng.normal(0.0, std, size=(n_out, n_in))
            b = rng.normal(0.0, std, size=n_out) if glorot_biases else np.zeros(n_out)
        layers.append(Layer(w=w, b=b, act=act))
    return Mlp(layers)


def init_actor(rng, glorot_biases=False):
    """Policy net 8 -> 400 -> 300 -> 4 (relu, relu, tanh), tiny output layer."""
    return init_mlp(rng, ACTOR_DIMS, ACTOR_ACTS,
                    out_uniform=ACTOR_OUT_SCALE, glorot_biases=glorot_biases)


def init_critic(rng, glorot_biases=False):
    """Q net 12 -> 400 -> 300 -> 1 (relu, relu, linear), Glorot everywhere."""
    return init_mlp(rng, CRITIC_DIMS, CRITIC_ACTS, glorot_biases=glorot_biases)


@dataclass
class FwdCache:
    """Activations saved by forward for the matching backward."""

    xs: list
    zs: list
    ys: list
    squeeze: bool


def _activate(z, act):
    if act == "relu":
        return np.maximum(z, 0.0)
    if act == "tanh":
        return np.tanh(z)
    return z


def forward(net, x):
    """Run the net on a sample (in,) or batch (n, in); returns (out, cache)."""
    x = np.asarray(x, dtype=float)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != net.in_dim:
        raise ValueError(f"input shape {x.shape} does not match in_dim {net.in_dim}")
    xs, zs, ys = [], [], []
    for layer in net.layers:
        xs.append(x)
        z = x @ layer.w.T + layer.b
        y = _activate(z, layer.act)
        zs.append(z)
        ys.append(y)
        x = y
    out = x[0] if squeeze else x
    return out, FwdCache(xs, zs, ys, squeeze)


def _check_cache(net, cache, grad_out):
    if len(cache.xs) != len(net.layers):
        raise ValueError("cache does not match network depth")
    g = np.asarray(grad_out, dtype=float)
    if cache.squeeze:
        if g.shape != (net.out_dim,):
            raise ValueError(f"grad_output shape {g.shape}, expected ({net.out_dim},)")
        g = g[None, :]
    elif g.shape != cache.ys[-1].shape:
        raise ValueError(f"grad_output shape {g.shape}, expected {cache.ys[-1].shape}")
    for x, layer in zip(cache.xs, net.layers):
        if x.shape[1] != layer.w.shape[1] or x.shape[0] != g.shape[0]:
            raise ValueError("cache activations do not match network/batch shapes")
    return g


def _grad_preact(layer, z, y, g):
    if layer.act == "relu":
        return kernels.relu_vjp(z, g)
    if layer.act == "tanh":
        return kernels.tanh_vjp(y, g)
    return g


def backward(net, cache, grad_out):
    """Exact gradients of sum(output * grad_out) for params and input.

    Returns ([(dw, db), ...] in layer order, grad_input). Batch gradients
    are summed over rows; fold any 1/n into grad_out.
    """
    g = _check_cache(net, cache, grad_out)
    grads = [None] * len(net.layers)
    for i in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[i]
        g = _grad_preact(layer, cache.zs[i], cache.ys[i], g)
        grads[i] = (g.T @ cache.xs[i], g.sum(axis=0))
        g = g @ layer.w
    grad_in = g[0] if cache.squeeze else g
    return grads, grad_in


def backward_input(net, cache, grad_out):
    """Gradient with respect to the input only (skips parameter grads)."""
    g = _check_cache(net, cache, grad_out)
    for i in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[i]
        g = _grad_preact(layer, cache.zs[i], cache.ys[i], g)
        g = g @ layer.w
    return g[0] if cache.squeeze else g


class AdamState:
    """Per-parameter first/second moments plus the shared step counter."""

    def __init__(self, net, beta1=0.9, beta2=0.999, eps=1e-8):
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [(np.zeros_like(l.w), np.zeros_like(l.b)) for l in net.layers]
        self.v = [(np.zeros_like(l.w), np.zeros_like(l.b)) for l in net.layers]


def adam_step(net, grads, state, lr):
    """One in-place Adam update with bias correction."""
    if lr <= 0.0:
        raise ValueError("lr must be positive")
    if len(grads) != len(net.layers):
        raise ValueError("gradient list does not match network depth")
    state.t += 1
    bc1 = 1.0 - state.beta1 ** state.t
    bc2 = 1.0 - state.beta2 ** state.t
    for layer, (dw, db), (mw, mb), (vw, vb) in zip(net.layers, grads, state.m, state.v):
        if dw.shape != layer.w.shape or db.shape != layer.b.shape:
            raise ValueError("gradient shapes do not match parameters")
        kernels.adam_update(layer.w, dw, mw, vw, lr, state.beta1, state.beta2,
                            state.eps, bc1, bc2)
        kernels.adam_update(layer.b, db, mb, vb, lr, state.beta1, state.beta2,
                            state.eps, bc1, bc2)


def sgd_step(net, grads, lr):
    """Plain gradient step, kept around for optimizer ablations."""
    for layer, (dw, db) in zip(net.layers, grads):
        layer.w -= lr * dw
        layer.b -= lr * db


def polyak_update(target, main, rho):
    """target <- rho*target + (1-rho)*main, elementwise in place."""
    if not 0.0 <= rho <= 1.0:
        raise ValueError("rho must be in [0, 1]")
    if len(target.layers) != len(main.layers):
        raise ValueError("network depths differ")
    for lt, lm in zip(target.layers, main.layers):
        if lt.w.shape != lm.w.shape:
            raise ValueError("layer shapes differ")
        kernels.polyak_blend(lt.w, lm.w, rho)
        kernels.polyak_blend(lt.b, lm.b, rho)


def copy_mlp(net):
    return Mlp([Layer(l.w.copy(), l.b.copy(), l.act) for l in net.layers])


def param_arrays(net):
    """Parameter arrays in serialization order: per layer, weights then biases."""
    for layer in net.layers:
        yield layer.w
        yield layer.b


def num_params(net):
    return sum(a.size for a in param_arrays(net))
