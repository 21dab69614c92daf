"""The toy-task contenders: gated-logic models and dense baselines.

A Logicron is one gated logic layer feeding a dense sigmoid head.  A
Perceptron is one dense hidden layer (no bias) with a pointwise nonlinearity
and the same head.  Default sizes are chosen so the trainable-scalar counts
come out to 97 (perceptron, h=24), 90 (logicron, 11 units + trainable
sharpness) and 110 (logicron with a 9-unit negation branch).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Graph, Node
from .lnu import LnuParams, lift_layer, lnu_forward

__all__ = [
    "MODEL_KINDS",
    "ACTIVATION_KINDS",
    "ModelSpec",
    "ParamCount",
    "Model",
    "Perceptron",
    "Logicron",
    "build_model",
    "count_params",
    "predict",
    "export_params",
    "default_model_suite",
]

MODEL_KINDS = ("perceptron", "logicron", "logicron_neg")
ACTIVATION_KINDS = ("sigmoid", "relu", "gelu")

_DEFAULT_HIDDEN = {"perceptron": 24, "logicron": 11, "logicron_neg": 9}


@dataclass(frozen=True)
class ModelSpec:
    """Architecture description; ``hidden`` is the dense width h or the gate unit count.

    ``sharpness`` is the (trainable, by default) gate temperature's initial
    value; a soft start generalizes better here than a near-hard gate.
    """

    kind: str
    input_dim: int = 3
    hidden: int | None = None
    activation: str = "relu"
    sharpness: float = 1.5
    trainable_sharpness: bool = True
    normalize: bool = False

    def __post_init__(self) -> None:
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.kind == "perceptron" and self.activation not in ACTIVATION_KINDS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.input_dim < 1:
            raise ValueError(f"input_dim must be >= 1, got {self.input_dim}")
        if self.hidden is not None and self.hidden < 1:
            raise ValueError(f"hidden must be >= 1, got {self.hidden}")

    @property
    def resolved_hidden(self) -> int:
        return self.hidden if self.hidden is not None else _DEFAULT_HIDDEN[self.kind]


@dataclass(frozen=True)
class ParamCount:
    total: int
    by_component: tuple[tuple[str, int], ...]


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


class Perceptron:
    """Dense hidden layer (no bias) + activation + dense sigmoid head."""

    def __init__(self, spec: ModelSpec, rng: np.random.Generator):
        h = spec.resolved_hidden
        self.spec = spec
        self.params: dict[str, np.ndarray] = {
            "w_hidden": _glorot(rng, spec.input_dim, h),
            "w_head": _glorot(rng, h, 1),
            "b_head": np.zeros((1, 1)),
        }

    def forward(self, graph: Graph, inputs: np.ndarray) -> tuple[Node, dict[str, Node]]:
        leaves = {name: graph.leaf(arr) for name, arr in self.params.items()}
        x = graph.leaf(inputs)
        hidden = ad.activation(self.spec.activation, ad.matmul(x, leaves["w_hidden"]))
        logits = ad.add(ad.matmul(hidden, leaves["w_head"]), leaves["b_head"])
        return ad.sigmoid(logits), leaves


class Logicron:
    """Gated logic layer + dense sigmoid head over the concatenated branches."""

    def __init__(self, spec: ModelSpec, rng: np.random.Generator):
        units = spec.resolved_hidden
        self.spec = spec
        self.lnu = LnuParams.create(
            spec.input_dim,
            units,
            sharpness=spec.sharpness,
            trainable_sharpness=spec.trainable_sharpness,
            negation_units=units if spec.kind == "logicron_neg" else 0,
            normalize=spec.normalize,
            rng=rng,
        )
        self.params: dict[str, np.ndarray] = dict(self.lnu.trainables())
        self.params["w_head"] = _glorot(rng, self.lnu.out_width, 1)
        self.params["b_head"] = np.zeros((1, 1))

    def forward(self, graph: Graph, inputs: np.ndarray) -> tuple[Node, dict[str, Node]]:
        gates = lift_layer(graph, self.lnu)
        leaves: dict[str, Node] = dict(gates.leaves())
        leaves["w_head"] = graph.leaf(self.params["w_head"])
        leaves["b_head"] = graph.leaf(self.params["b_head"])
        x = graph.leaf(inputs)
        hidden = lnu_forward(x, gates)
        logits = ad.add(ad.matmul(hidden, leaves["w_head"]), leaves["b_head"])
        return ad.sigmoid(logits), leaves


Model = Perceptron | Logicron


def build_model(spec: ModelSpec, seed: int | np.random.SeedSequence = 0) -> Model:
    """Deterministically initialize a model from a seed."""
    rng = np.random.default_rng(seed)
    if spec.kind == "perceptron":
        return Perceptron(spec, rng)
    return Logicron(spec, rng)


def count_params(model: Model) -> ParamCount:
    components = tuple((name, int(arr.size)) for name, arr in model.params.items())
    return ParamCount(total=sum(c for _, c in components), by_component=components)


def predict(model: Model, inputs: np.ndarray) -> np.ndarray:
    """Hard class decisions: sigmoid output thresholded at 0.5."""
    out, _ = model.forward(Graph(), ad.as_matrix(inputs))
    return out.value[:, 0] >= 0.5


def export_params(model: Model) -> dict[str, list]:
    """Flat name -> nested-list mapping, ready for json.dump."""
    return {name: arr.tolist() for name, arr in model.params.items()}


def default_model_suite(
    input_dim: int = 3,
    *,
    perceptron_hidden: int = 24,
    logicron_units: int = 11,
    logicron_neg_units: int = 9,
    sharpness: float = 1.5,
) -> list[tuple[str, ModelSpec]]:
    """The five standard contenders, in reporting order."""
    return [
        ("MLP-Sigmoid", ModelSpec("perceptron", input_dim, perceptron_hidden, activation="sigmoid")),
        ("MLP-ReLU", ModelSpec("perceptron", input_dim, perceptron_hidden, activation="relu")),
        ("MLP-GeLU", ModelSpec("perceptron", input_dim, perceptron_hidden, activation="gelu")),
        ("Logicron", ModelSpec("logicron", input_dim, logicron_units, sharpness=sharpness)),
        ("Logicron+Neg", ModelSpec("logicron_neg", input_dim, logicron_neg_units, sharpness=sharpness)),
    ]
