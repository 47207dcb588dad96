"""Multilayer perceptrons and the Adam optimizer.

Parameters are plain numpy arrays held in a dataclass; a forward pass
lifts them into the autodiff graph so gradients land on per-layer leaf
tensors. Weight matrices are stored (d_out, d_in); the graph computes
x @ W.T + b on row-major batches.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .errors import ShapeError

ACTIVATIONS = ("lrelu", "identity", "sigmoid")
LEAKY_SLOPE = 0.2


@dataclass
class MlpParams:
    """Weights (d_out, d_in), biases (d_out,), one activation per layer."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activations: list[str]

    def __post_init__(self):
        if not (len(self.weights) == len(self.biases) == len(self.activations) >= 1):
            raise ValueError("weights, biases and activations must align, one per layer")
        for i, (w, b, act) in enumerate(zip(self.weights, self.biases, self.activations)):
            if w.ndim != 2 or b.ndim != 1 or w.shape[0] != b.shape[0]:
                raise ShapeError(f"layer {i}: weight {w.shape} and bias {b.shape} disagree")
            if i > 0 and w.shape[1] != self.weights[i - 1].shape[0]:
                raise ShapeError(
                    f"layer {i}: input dim {w.shape[1]} != previous output "
                    f"{self.weights[i - 1].shape[0]}"
                )
            if act not in ACTIVATIONS:
                raise ValueError(f"layer {i}: unknown activation {act!r}")

    @property
    def layer_dims(self) -> list[int]:
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    def copy(self) -> "MlpParams":
        return MlpParams(
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            list(self.activations),
        )


def init_params(
    layer_dims: list[int], activations: list[str], rng: np.random.Generator
) -> MlpParams:
    """Glorot-uniform weights, zero biases.

    Each weight entry is uniform on [-a, a] with a = sqrt(6 / (fan_in + fan_out)).
    """
    if len(layer_dims) < 2:
        raise ValueError("need at least an input and an output dimension")
    if any(d < 1 for d in layer_dims):
        raise ValueError(f"layer dims must be positive, got {layer_dims}")
    if len(activations) != len(layer_dims) - 1:
        raise ValueError(
            f"{len(layer_dims) - 1} layers need {len(layer_dims) - 1} activations, "
            f"got {len(activations)}"
        )
    weights, biases = [], []
    for d_in, d_out in zip(layer_dims[:-1], layer_dims[1:]):
        bound = math.sqrt(6.0 / (d_in + d_out))
        weights.append(rng.uniform(-bound, bound, size=(d_out, d_in)))
        biases.append(np.zeros(d_out))
    return MlpParams(weights, biases, list(activations))


def param_tensors(params: MlpParams) -> tuple[list[ad.Tensor], list[ad.Tensor]]:
    """Lift parameter arrays to gradient-tracking leaves (biases as (1, d))."""
    ws = [ad.parameter(w) for w in params.weights]
    bs = [ad.parameter(b.reshape(1, -1)) for b in params.biases]
    return ws, bs


def apply_layers(
    x: ad.Tensor, ws: list[ad.Tensor], bs: list[ad.Tensor], activations: list[str]
) -> ad.Tensor:
    for w, b, act in zip(ws, bs, activations):
        x = ad.add(ad.matmul(x, ad.transpose(w)), b)
        if act == "lrelu":
            x = ad.leaky_relu(x, LEAKY_SLOPE)
        elif act == "sigmoid":
            x = ad.sigmoid(x)
    return x


def mlp_apply(params: MlpParams, x) -> ad.Tensor:
    """Forward pass on a constant input; use param_tensors for training graphs."""
    x = x if isinstance(x, ad.Tensor) else ad.constant(x)
    if x.shape[1] != params.weights[0].shape[1]:
        raise ShapeError(
            f"input has {x.shape[1]} columns, first layer expects "
            f"{params.weights[0].shape[1]}"
        )
    ws, bs = param_tensors(params)
    return apply_layers(x, ws, bs, params.activations)


def mlp_forward(params: MlpParams, x: np.ndarray) -> np.ndarray:
    """Plain-numpy forward pass (no graph)."""
    v = np.asarray(x, dtype=np.float64)
    for w, b, act in zip(params.weights, params.biases, params.activations):
        v = v @ w.T + b
        if act == "lrelu":
            v = np.where(v > 0, v, LEAKY_SLOPE * v)
        elif act == "sigmoid":
            v = np.where(v >= 0, 1.0 / (1.0 + np.exp(-np.abs(v))),
                         np.exp(-np.abs(v)) / (1.0 + np.exp(-np.abs(v))))
    return v


def collect_grads(
    ws: list[ad.Tensor], bs: list[ad.Tensor]
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Read accumulated gradients off parameter leaves (zeros if untouched)."""
    gw = [t.grad if t.grad is not None else np.zeros(t.shape) for t in ws]
    gb = [(t.grad if t.grad is not None else np.zeros(t.shape)).ravel() for t in bs]
    return gw, gb


@dataclass
class AdamState:
    """First/second moment accumulators plus the shared step counter."""

    m_w: list[np.ndarray]
    v_w: list[np.ndarray]
    m_b: list[np.ndarray]
    v_b: list[np.ndarray]
    t: int = 0
    alpha: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def init(cls, params: MlpParams, alpha: float = 1e-3, beta1: float = 0.9,
             beta2: float = 0.999, eps: float = 1e-8) -> "AdamState":
        return cls(
            m_w=[np.zeros_like(w) for w in params.weights],
            v_w=[np.zeros_like(w) for w in params.weights],
            m_b=[np.zeros_like(b) for b in params.biases],
            v_b=[np.zeros_like(b) for b in params.biases],
            alpha=alpha, beta1=beta1, beta2=beta2, eps=eps,
        )


def _adam_update(p, g, m, v, state: AdamState, t: int):
    m_new = state.beta1 * m + (1.0 - state.beta1) * g
    v_new = state.beta2 * v + (1.0 - state.beta2) * g * g
    m_hat = m_new / (1.0 - state.beta1 ** t)
    v_hat = v_new / (1.0 - state.beta2 ** t)
    p_new = p - state.alpha * m_hat / (np.sqrt(v_hat) + state.eps)
    return p_new, m_new, v_new


def adam_step(
    params: MlpParams,
    grads: tuple[list[np.ndarray], list[np.ndarray]],
    state: AdamState,
) -> tuple[MlpParams, AdamState]:
    """One bias-corrected Adam update; returns fresh params and state."""
    gw, gb = grads
    if len(gw) != len(params.weights) or len(gb) != len(params.biases):
        raise ShapeError("gradient list lengths do not match the parameter lists")
    for g, p in zip(gw + gb, params.weights + params.biases):
        if g.shape != p.shape:
            raise ShapeError(f"gradient shape {g.shape} != parameter shape {p.shape}")
    t = state.t + 1
    new_w, new_mw, new_vw = [], [], []
    for p, g, m, v in zip(params.weights, gw, state.m_w, state.v_w):
        pn, mn, vn = _adam_update(p, g, m, v, state, t)
        new_w.append(pn); new_mw.append(mn); new_vw.append(vn)
    new_b, new_mb, new_vb = [], [], []
    for p, g, m, v in zip(params.biases, gb, state.m_b, state.v_b):
        pn, mn, vn = _adam_update(p, g, m, v, state, t)
        new_b.append(pn); new_mb.append(mn); new_vb.append(vn)
    next_params = MlpParams(new_w, new_b, list(params.activations))
    next_state = AdamState(new_mw, new_vw, new_mb, new_vb, t,
                           state.alpha, state.beta1, state.beta2, state.eps)
    return next_params, next_state
