"""Minimal fully-connected networks: explicit forward tape, exact backprop, Adam.

All math is float64. Weight matrices are stored (out_dim, in_dim); a batch is
(n, in_dim) and layers compute x @ W.T + b.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ContractError, NumericError

ACTIVATIONS = ("relu", "identity")


@dataclass(frozen=True)
class LayerSpec:
    input_dim: int
    output_dim: int
    activation: str = "relu"

    def __post_init__(self):
        if self.input_dim < 1 or self.output_dim < 1:
            raise ConfigError(
                f"layer dims must be positive, got {self.input_dim}->{self.output_dim}"
            )
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"unknown activation {self.activation!r}")


def mlp_spec(dims, final_activation="identity"):
    """Layer specs for a ReLU MLP through `dims`, e.g. [2, 128, 128, 128, 2]."""
    if len(dims) < 2:
        raise ConfigError("need at least an input and an output dim")
    specs = []
    for i in range(len(dims) - 1):
        act = final_activation if i == len(dims) - 2 else "relu"
        specs.append(LayerSpec(dims[i], dims[i + 1], act))
    return specs


def _check_chain(spec):
    for a, b in zip(spec, spec[1:]):
        if a.output_dim != b.input_dim:
            raise ConfigError(
                f"layer dims do not chain: {a.output_dim} -> {b.input_dim}"
            )


@dataclass
class NetworkParams:
    spec: list[LayerSpec]
    weights: list[np.ndarray]  # (out, in) per layer
    biases: list[np.ndarray]  # (out,)

    @property
    def input_dim(self) -> int:
        return self.spec[0].input_dim

    @property
    def output_dim(self) -> int:
        return self.spec[-1].output_dim

    def num_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def copy(self) -> "NetworkParams":
        return NetworkParams(
            spec=list(self.spec),
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
        )


def init_network(spec, seed: int) -> NetworkParams:
    """He-initialized network: W ~ N(0, scale/fan_in), biases zero.

    scale is 2 for relu layers and 1 for identity layers; deterministic in seed.
    """
    spec = list(spec)
    if not spec:
        raise ConfigError("empty layer spec")
    _check_chain(spec)
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for layer in spec:
        scale = 2.0 if layer.activation == "relu" else 1.0
        std = np.sqrt(scale / layer.input_dim)
        weights.append(std * rng.standard_normal((layer.output_dim, layer.input_dim)))
        biases.append(np.zeros(layer.output_dim))
    return NetworkParams(spec=spec, weights=weights, biases=biases)


@dataclass
class ActivationTape:
    """Everything forward() saw: the batch plus per-layer pre/post activations."""

    inputs: np.ndarray
    pre_activations: list[np.ndarray]
    post_activations: list[np.ndarray]

    @property
    def output(self) -> np.ndarray:
        return self.post_activations[-1]


def forward(net: NetworkParams, batch) -> ActivationTape:
    """Run the network on a (n, input_dim) batch, retaining the tape."""
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != net.input_dim:
        raise ContractError(
            f"batch shape {x.shape} does not match input_dim {net.input_dim}"
        )
    if not np.isfinite(x).all():
        raise NumericError("non-finite values in network input")
    pre, post = [], []
    a = x
    for layer, w, b in zip(net.spec, net.weights, net.biases):
        z = a @ w.T + b
        a = np.maximum(z, 0.0) if layer.activation == "relu" else z
        pre.append(z)
        post.append(a)
    return ActivationTape(inputs=x, pre_activations=pre, post_activations=post)


@dataclass
class GradientSet:
    weights: list[np.ndarray]
    biases: list[np.ndarray]


def backward(net: NetworkParams, tape: ActivationTape, output_grad):
    """Backprop `output_grad` (n, output_dim) through the tape.

    Returns (GradientSet, input_grad). ReLU subgradient at exactly 0 is 0.
    """
    g = np.asarray(output_grad, dtype=np.float64)
    if g.shape != tape.post_activations[-1].shape:
        raise ContractError(
            f"output_grad shape {g.shape} does not match output "
            f"{tape.post_activations[-1].shape}"
        )
    n_layers = len(net.spec)
    d_weights = [None] * n_layers
    d_biases = [None] * n_layers
    for i in range(n_layers - 1, -1, -1):
        if net.spec[i].activation == "relu":
            g = g * (tape.pre_activations[i] > 0.0)
        a_in = tape.inputs if i == 0 else tape.post_activations[i - 1]
        d_weights[i] = g.T @ a_in
        d_biases[i] = g.sum(axis=0)
        g = g @ net.weights[i]
    return GradientSet(weights=d_weights, biases=d_biases), g


@dataclass(frozen=True)
class AdamHyper:
    learning_rate: float = 1e-4
    beta1: float = 0.5
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass
class AdamState:
    m_weights: list[np.ndarray]
    m_biases: list[np.ndarray]
    v_weights: list[np.ndarray]
    v_biases: list[np.ndarray]
    step_count: int
    hyper: AdamHyper


def init_adam(net: NetworkParams, hyper: AdamHyper = AdamHyper()) -> AdamState:
    return AdamState(
        m_weights=[np.zeros_like(w) for w in net.weights],
        m_biases=[np.zeros_like(b) for b in net.biases],
        v_weights=[np.zeros_like(w) for w in net.weights],
        v_biases=[np.zeros_like(b) for b in net.biases],
        step_count=0,
        hyper=hyper,
    )


def adam_step(net: NetworkParams, grads: GradientSet, state: AdamState):
    """One bias-corrected Adam update; returns (new_params, new_state)."""
    for dw, db in zip(grads.weights, grads.biases):
        if not (np.isfinite(dw).all() and np.isfinite(db).all()):
            raise NumericError("non-finite gradients passed to adam_step")
    h = state.hyper
    t = state.step_count + 1
    c1 = 1.0 - h.beta1**t
    c2 = 1.0 - h.beta2**t

    def upd(p, g, m, v):
        m_new = h.beta1 * m + (1.0 - h.beta1) * g
        v_new = h.beta2 * v + (1.0 - h.beta2) * g * g
        p_new = p - h.learning_rate * (m_new / c1) / (np.sqrt(v_new / c2) + h.eps)
        return p_new, m_new, v_new

    new_w, new_b = [], []
    new_state = AdamState([], [], [], [], t, h)
    for i in range(len(net.weights)):
        p, m, v = upd(net.weights[i], grads.weights[i], state.m_weights[i], state.v_weights[i])
        new_w.append(p)
        new_state.m_weights.append(m)
        new_state.v_weights.append(v)
        p, m, v = upd(net.biases[i], grads.biases[i], state.m_biases[i], state.v_biases[i])
        new_b.append(p)
        new_state.m_biases.append(m)
        new_state.v_biases.append(v)
    return NetworkParams(spec=list(net.spec), weights=new_w, biases=new_b), new_state


def network_to_jsonable(net: NetworkParams) -> dict:
    return {
        "spec": [
            {"in": s.input_dim, "out": s.output_dim, "activation": s.activation}
            for s in net.spec
        ],
        "layers": [
            {"w": w.tolist(), "b": b.tolist()}
            for w, b in zip(net.weights, net.biases)
        ],
    }


def network_from_jsonable(obj: dict) -> NetworkParams:
    spec = [LayerSpec(s["in"], s["out"], s["activation"]) for s in obj["spec"]]
    _check_chain(spec)
    weights = [np.asarray(l["w"], dtype=np.float64) for l in obj["layers"]]
    biases = [np.asarray(l["b"], dtype=np.float64) for l in obj["layers"]]
    net = NetworkParams(spec=spec, weights=weights, biases=biases)
    for s, w, b in zip(spec, weights, biases):
        if w.shape != (s.output_dim, s.input_dim) or b.shape != (s.output_dim,):
            raise ConfigError(f"checkpoint shapes inconsistent with spec {s}")
    if any(not np.isfinite(w).all() for w in weights) or any(
        not np.isfinite(b).all() for b in biases
    ):
        raise NumericError("non-finite parameters in checkpoint")
    return net


def save_checkpoint(net: NetworkParams, path) -> None:
    """JSON checkpoint; float repr round-trips exactly, so load-then-save is stable."""
    with open(path, "w") as f:
        json.dump(network_to_jsonable(net), f)


def load_checkpoint(path) -> NetworkParams:
    with open(path) as f:
        return network_from_jsonable(json.load(f))
