"""Sine-activated coordinate MLP with hand-written backpropagation and Adam."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._kernels import sin_scaled, sine_backprop

SINE = "sine"
FINER = "finer"

DEFAULT_OMEGA = 30.0
DEFAULT_HIDDEN = 256
DEFAULT_DEPTH = 6


@dataclass(frozen=True)
class Activation:
    kind: str = SINE
    omega: float = DEFAULT_OMEGA

    def __post_init__(self):
        if self.kind not in (SINE, FINER):
            raise ValueError(f"unknown activation kind {self.kind!r}")
        if not self.omega > 0:
            raise ValueError(f"omega must be positive, got {self.omega}")


@dataclass
class Layer:
    weights: np.ndarray  # (out, in)
    biases: np.ndarray  # (out,)

    @property
    def shape(self) -> tuple[int, int]:
        return self.weights.shape

    def copy(self) -> "Layer":
        return Layer(self.weights.copy(), self.biases.copy())


@dataclass
class SineMLP:
    """Parameters of an MLP whose hidden layers use the sine (or FINER) nonlinearity.

    The final layer is linear.
    """

    layers: list[Layer]
    activation: Activation = field(default_factory=Activation)

    def __post_init__(self):
        if not self.layers:
            raise ValueError("an MLP needs at least one layer")
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if prev.weights.shape[0] != nxt.weights.shape[1]:
                raise ValueError("layer shapes do not chain")

    @property
    def layout(self) -> tuple[int, ...]:
        return (self.layers[0].weights.shape[1],) + tuple(l.weights.shape[0] for l in self.layers)

    @property
    def n_params(self) -> int:
        return sum(l.weights.size + l.biases.size for l in self.layers)

    def arrays(self) -> list[np.ndarray]:
        """Parameter arrays in storage order (per layer: weights, then biases)."""
        out = []
        for l in self.layers:
            out += [l.weights, l.biases]
        return out

    def copy(self) -> "SineMLP":
        return SineMLP([l.copy() for l in self.layers], self.activation)


def default_layout(in_dim: int = 2, out_dim: int = 3, depth: int = DEFAULT_DEPTH,
                   hidden: int = DEFAULT_HIDDEN) -> tuple[int, ...]:
    """Layout of a ``depth``-layer MLP: ``depth - 1`` hidden sine layers and a linear head."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    return (in_dim,) + (hidden,) * (depth - 1) + (out_dim,)


def layer_bound(index: int, fan_in: int, omega: float) -> float:
    """Uniform init bound for the weights of layer ``index`` (SIREN scheme)."""
    if index == 0:
        return 1.0 / fan_in
    return math.sqrt(6.0 / fan_in) / omega


def init_layer(index: int, fan_in: int, fan_out: int, activation: Activation,
               rng: np.random.Generator) -> Layer:
    bound = layer_bound(index, fan_in, activation.omega)
    w = rng.uniform(-bound, bound, size=(fan_out, fan_in))
    if index == 0 and activation.kind == FINER:
        bbound = 1.0 / math.sqrt(2.0)
    else:
        bbound = bound
    b = rng.uniform(-bbound, bbound, size=fan_out)
    return Layer(w, b)


def init_siren(layout: Sequence[int], activation: Activation | None = None,
               rng: np.random.Generator | None = None) -> SineMLP:
    layout = tuple(int(n) for n in layout)
    if len(layout) < 2 or min(layout) < 1:
        raise ValueError(f"layout needs >= 2 positive widths, got {layout}")
    activation = activation or Activation()
    rng = rng if rng is not None else np.random.default_rng()
    layers = [init_layer(i, layout[i], layout[i + 1], activation, rng)
              for i in range(len(layout) - 1)]
    return SineMLP(layers, activation)


# --- forward / backward -------------------------------------------------------

@dataclass
class ForwardCache:
    inputs: list[np.ndarray]  # input to each layer
    pre: list[np.ndarray]  # pre-activation of each activated layer
    activation: Activation
    shapes: tuple[tuple[int, int], ...]


def _act(z: np.ndarray, act: Activation) -> np.ndarray:
    if act.kind == SINE:
        return sin_scaled(z, act.omega)
    return np.sin(act.omega * (np.abs(z) + 1.0) * z)


def _act_grad(z: np.ndarray, act: Activation) -> np.ndarray:
    if act.kind == SINE:
        return act.omega * np.cos(act.omega * z)
    # d/dz [(|z|+1) z] = 2|z| + 1, with sign(0) taken as 0
    az = np.abs(z)
    return act.omega * (2.0 * az + 1.0) * np.cos(act.omega * (az + 1.0) * z)


def forward_layers(layers: Sequence[Layer], act: Activation, x: np.ndarray,
                   linear_last: bool = True) -> tuple[np.ndarray, ForwardCache]:
    """Run ``x`` through ``layers``; every layer is activated except a linear last one."""
    inputs, pre = [], []
    a = x
    n = len(layers)
    for i, layer in enumerate(layers):
        inputs.append(a)
        z = a @ layer.weights.T
        z += layer.biases
        if linear_last and i == n - 1:
            a = z
        else:
            pre.append(z)
            a = _act(z, act)
    shapes = tuple(l.weights.shape for l in layers)
    return a, ForwardCache(inputs, pre, act, shapes)


def backward_layers(layers: Sequence[Layer], cache: ForwardCache, grad_out: np.ndarray,
                    linear_last: bool = True, need_input_grad: bool = False):
    """Gradients of a scalar loss w.r.t. every layer, given d loss / d output.

    Returns ``(grads, grad_input)``; ``grad_input`` is None unless requested.
    """
    if tuple(l.weights.shape for l in layers) != cache.shapes:
        raise ValueError("cache was produced by a model with different shapes")
    n = len(layers)
    grads: list[Layer | None] = [None] * n
    g = grad_out
    k = len(cache.pre)
    for i in range(n - 1, -1, -1):
        layer = layers[i]
        if not (linear_last and i == n - 1):
            k -= 1
            if cache.activation.kind == SINE:
                g = sine_backprop(g, cache.pre[k], cache.activation.omega)
            else:
                g = g * _act_grad(cache.pre[k], cache.activation)
        grads[i] = Layer(g.T @ cache.inputs[i], g.sum(axis=0))
        if i > 0 or need_input_grad:
            g = g @ layer.weights
    return grads, (g if need_input_grad else None)


def forward(params: SineMLP, coords: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
    coords = np.asarray(coords, dtype=np.float64)
    if coords.ndim != 2 or coords.shape[1] != params.layout[0]:
        raise ValueError(f"coords must be (batch, {params.layout[0]}), got {coords.shape}")
    return forward_layers(params.layers, params.activation, coords, linear_last=True)


def backward(params: SineMLP, cache: ForwardCache, grad_outputs: np.ndarray) -> list[Layer]:
    grads, _ = backward_layers(params.layers, cache, grad_outputs, linear_last=True)
    return grads


def mse_grad(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean squared error and its gradient with respect to ``pred``."""
    diff = pred - target
    return float(np.mean(diff * diff)), (2.0 / diff.size) * diff


# --- optimizer ----------------------------------------------------------------

@dataclass
class AdamState:
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list[np.ndarray] | None = None
    v: list[np.ndarray] | None = None


def adam_step(params: list[np.ndarray], grads: list[np.ndarray], state: AdamState) -> None:
    """One bias-corrected Adam update, applied in place to ``params`` and ``state``."""
    if len(params) != len(grads):
        raise ValueError("params and grads differ in length")
    if state.m is None:
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
    for p, g in zip(params, grads):
        if p.shape != g.shape:
            raise ValueError(f"gradient shape {g.shape} does not match parameter {p.shape}")
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite gradient at Adam step {state.step + 1}")
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)


def layer_arrays(layers: Sequence[Layer]) -> list[np.ndarray]:
    out = []
    for l in layers:
        out += [l.weights, l.biases]
    return out
