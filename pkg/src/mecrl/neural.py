"""Two-layer ReLU perceptrons with hand-written backpropagation.

The deterministic policy update needs exact gradients with respect to the
network *input* as well as the parameters, so both paths are derived
analytically and checked against central finite differences. Parameters
live in one flat float64 buffer with reshaped views per layer, which lets
the optimizer and target blending run as single vector operations.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

HIDDEN = 64

_LAYER_NAMES = ("w1", "b1", "w2", "b2")


class _LayerViews:
    """Flat buffer with (w1, b1, w2, b2) views; layout w1|b1|w2|b2."""

    __slots__ = ("in_dim", "hidden", "out_dim", "flat", "w1", "b1", "w2", "b2")

    def __init__(self, in_dim: int, out_dim: int, hidden: int = HIDDEN, flat=None):
        if in_dim < 1 or out_dim < 1 or hidden < 1:
            raise ValueError("layer dimensions must be >= 1")
        total = hidden * in_dim + hidden + out_dim * hidden + out_dim
        if flat is None:
            flat = np.zeros(total)
        else:
            flat = np.asarray(flat, dtype=np.float64)
            if flat.shape != (total,):
                raise ValueError(f"flat buffer must have shape ({total},), got {flat.shape}")
        self.in_dim, self.hidden, self.out_dim = in_dim, hidden, out_dim
        self.flat = flat
        o = 0
        self.w1 = flat[o:o + hidden * in_dim].reshape(hidden, in_dim)
        o += hidden * in_dim
        self.b1 = flat[o:o + hidden]
        o += hidden
        self.w2 = flat[o:o + out_dim * hidden].reshape(out_dim, hidden)
        o += out_dim * hidden
        self.b2 = flat[o:]

    def copy(self):
        return type(self)(self.in_dim, self.out_dim, self.hidden, self.flat.copy())

    def same_shape(self, other) -> bool:
        return (self.in_dim, self.hidden, self.out_dim) == (other.in_dim, other.hidden, other.out_dim)


class MlpParams(_LayerViews):
    """Weights and biases of one two-layer ReLU network."""


class Gradients(_LayerViews):
    """Parameter gradients, shape-matched to an MlpParams."""


def init_mlp(in_dim: int, out_dim: int, rng: np.random.Generator, hidden: int = HIDDEN) -> MlpParams:
    """Glorot-uniform weights, zero biases."""
    p = MlpParams(in_dim, out_dim, hidden)
    lim1 = np.sqrt(6.0 / (in_dim + hidden))
    lim2 = np.sqrt(6.0 / (hidden + out_dim))
    p.w1[:] = rng.uniform(-lim1, lim1, p.w1.shape)
    p.w2[:] = rng.uniform(-lim2, lim2, p.w2.shape)
    return p


def forward(p: MlpParams, x):
    """Evaluate the network; returns (y, cache) with cache for backward.

    ``x`` may be a single input vector or a (batch, in_dim) matrix; the
    output shape follows suit.
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    xb = x[None, :] if single else x
    if xb.ndim != 2 or xb.shape[1] != p.in_dim:
        raise ValueError(f"input has shape {x.shape}, network expects in_dim {p.in_dim}")
    h1 = xb @ p.w1.T
    h1 += p.b1
    np.maximum(h1, 0.0, out=h1)
    y = h1 @ p.w2.T
    y += p.b2
    return (y[0] if single else y), (xb, h1, single)


def eval_vec(p: MlpParams, x: np.ndarray) -> np.ndarray:
    """Cache-free single-vector evaluation (hot path for acting)."""
    h1 = p.w1 @ x + p.b1
    np.maximum(h1, 0.0, out=h1)
    return p.w2 @ h1 + p.b2


def backward(p: MlpParams, cache, dy, out: Gradients | None = None, need_dx: bool = True):
    """Gradients of ``<dy, y>`` w.r.t. parameters and input.

    Returns ``(g, dx)``; ``dx`` is None when ``need_dx`` is false. ``out``
    may supply a preallocated Gradients buffer.
    """
    xb, h1, single = cache
    dy = np.asarray(dy, dtype=np.float64)
    dyb = dy[None, :] if single else dy
    if dyb.shape != (xb.shape[0], p.out_dim):
        raise ValueError(
            f"upstream gradient shape {dy.shape} does not match cache batch "
            f"{xb.shape[0]} and out_dim {p.out_dim}"
        )
    g = out if out is not None else Gradients(p.in_dim, p.out_dim, p.hidden)
    np.matmul(dyb.T, h1, out=g.w2)
    np.sum(dyb, axis=0, out=g.b2)
    dh1 = dyb @ p.w2
    # ReLU mask: post-activation h1 is positive exactly where the
    # pre-activation was.
    dz1 = np.multiply(dh1, h1 > 0.0, out=dh1)
    np.matmul(dz1.T, xb, out=g.w1)
    np.sum(dz1, axis=0, out=g.b1)
    if not need_dx:
        return g, None
    dx = dz1 @ p.w1
    return g, (dx[0] if single else dx)


@dataclass
class AdamState:
    """First/second-moment accumulators and step constants for one network."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: np.ndarray | None = field(default=None, repr=False)
    v: np.ndarray | None = field(default=None, repr=False)
    _scratch: np.ndarray | None = field(default=None, repr=False)


def adam_step(state: AdamState, p: MlpParams, g: Gradients) -> None:
    """One bias-corrected adaptive-moment descent step along ``g``.

    Callers negate the gradient for ascent. Mutates ``p`` and ``state``.
    """
    if not p.same_shape(g):
        raise ValueError("gradient shapes do not match parameters")
    if state.m is None:
        state.m = np.zeros_like(p.flat)
        state.v = np.zeros_like(p.flat)
        state._scratch = np.empty_like(p.flat)
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    s = state._scratch
    np.multiply(state.m, b1, out=state.m)
    np.multiply(g.flat, 1.0 - b1, out=s)
    state.m += s
    np.multiply(state.v, b2, out=state.v)
    np.multiply(g.flat, g.flat, out=s)
    s *= 1.0 - b2
    state.v += s
    np.multiply(state.v, 1.0 / (1.0 - b2 ** state.t), out=s)
    np.sqrt(s, out=s)
    s += state.eps
    np.divide(state.m, s, out=s)
    s *= state.lr / (1.0 - b1 ** state.t)
    p.flat -= s


def soft_update(target: MlpParams, online: MlpParams, tau_soft: float) -> None:
    """Blend ``target`` toward ``online``: (1 - tau)*target + tau*online."""
    if not target.same_shape(online):
        raise ValueError("target and online networks differ in shape")
    if not 0.0 <= tau_soft <= 1.0:
        raise ValueError(f"tau_soft must lie in [0, 1], got {tau_soft}")
    target.flat *= 1.0 - tau_soft
    target.flat += tau_soft * online.flat


def grad_check(p: MlpParams, x, dy, step: float = 1e-6) -> float:
    """Max relative deviation of backward against central differences.

    Covers every parameter and every input component. The relative error
    uses a guarded denominator so an all-zero comparison reports 0.
    """
    xa = np.array(x, dtype=np.float64)
    dya = np.asarray(dy, dtype=np.float64)

    def objective() -> float:
        y, _ = forward(p, xa)
        return float(np.sum(dya * y))

    y, cache = forward(p, xa)
    g, dx = backward(p, cache, dya)

    worst = 0.0
    for arr, analytic in ((p.flat, g.flat), (xa.ravel(), np.asarray(dx).ravel())):
        for i in range(arr.size):
            orig = arr[i]
            arr[i] = orig + step
            f_plus = objective()
            arr[i] = orig - step
            f_minus = objective()
            arr[i] = orig
            numeric = (f_plus - f_minus) / (2.0 * step)
            denom = max(abs(numeric) + abs(analytic[i]), 1e-8)
            worst = max(worst, abs(numeric - analytic[i]) / denom)
    return worst


def params_to_doc(p: MlpParams) -> dict:
    """Shape-tagged flat decimal arrays, one entry per layer."""
    return {
        name: {"shape": list(getattr(p, name).shape), "data": getattr(p, name).ravel().tolist()}
        for name in _LAYER_NAMES
    }


def params_from_doc(doc: dict) -> MlpParams:
    """Rebuild parameters from :func:`params_to_doc` output."""
    try:
        shapes = {name: tuple(doc[name]["shape"]) for name in _LAYER_NAMES}
        data = {name: doc[name]["data"] for name in _LAYER_NAMES}
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed parameter document: {exc}") from exc
    hidden, in_dim = shapes["w1"]
    out_dim = shapes["b2"][0]
    expect = {"w1": (hidden, in_dim), "b1": (hidden,), "w2": (out_dim, hidden), "b2": (out_dim,)}
    if shapes != expect:
        raise ValueError(f"inconsistent layer shapes: {shapes}")
    p = MlpParams(in_dim, out_dim, hidden)
    for name in _LAYER_NAMES:
        arr = np.asarray(data[name], dtype=np.float64)
        if arr.size != getattr(p, name).size:
            raise ValueError(f"layer {name}: expected {getattr(p, name).size} values, got {arr.size}")
        getattr(p, name)[:] = arr.reshape(shapes[name])
    return p


def save_params(p: MlpParams, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(params_to_doc(p), f)


def load_params(path) -> MlpParams:
    with open(path, "r", encoding="utf-8") as f:
        return params_from_doc(json.load(f))
