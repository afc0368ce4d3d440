"""Canonical fixture networks.

Small enough to verify by hand, and referenced throughout the tests:

* gate_net: one hidden neuron h = max(0, x1 - 0.5); logits (h, 0.2 - h), so
  class 0 wins exactly when x1 > 0.6 and x2 is irrelevant.
* tiny_net: logits (|x1 - x2|, -|x1 - x2|); class 0 except on the tie line.
* shifted_tiny_net: tiny_net with 0.5 added to the first output bias, making
  class 0 win everywhere with margin at least 0.5.
* mixed_net: binary + integer + continuous features, three classes.
"""

from __future__ import annotations

import numpy as np

from .model import Ann, FeatureSpec, Layer


def _unit_box(names):
    return [FeatureSpec(n, "continuous", 0.0, 1.0) for n in names]


def gate_net() -> Ann:
    return Ann(
        name="gate",
        features=_unit_box(["x1", "x2"]),
        layers=[
            Layer(np.array([[1.0, 0.0]]), np.array([-0.5])),
            Layer(np.array([[1.0], [-1.0]]), np.array([0.0, 0.2])),
        ],
        classes=["high", "low"],
    )


def tiny_net() -> Ann:
    return Ann(
        name="tiny",
        features=_unit_box(["x1", "x2"]),
        layers=[
            Layer(np.array([[1.0, -1.0], [-1.0, 1.0]]), np.array([0.0, 0.0])),
            Layer(np.array([[1.0, 1.0], [-1.0, -1.0]]), np.array([0.0, 0.0])),
        ],
        classes=["apart", "close"],
    )


def shifted_tiny_net() -> Ann:
    return Ann(
        name="tiny-shifted",
        features=_unit_box(["x1", "x2"]),
        layers=[
            Layer(np.array([[1.0, -1.0], [-1.0, 1.0]]), np.array([0.0, 0.0])),
            Layer(np.array([[1.0, 1.0], [-1.0, -1.0]]), np.array([0.5, 0.0])),
        ],
        classes=["apart", "close"],
    )


def mixed_net() -> Ann:
    return Ann(
        name="mixed",
        features=[
            FeatureSpec("flag", "binary", 0.0, 1.0),
            FeatureSpec("count", "integer", 0.0, 3.0),
            FeatureSpec("level", "continuous", 0.0, 1.0),
        ],
        layers=[
            Layer(np.array([[0.5, 0.25, 0.0], [0.0, 0.0, 1.0]]), np.array([-0.5, -0.3])),
            Layer(
                np.array([[1.0, -1.0], [-1.0, 1.0], [1.0, 1.0]]),
                np.array([0.0, 0.0, -0.6]),
            ),
        ],
        classes=["first", "second", "both"],
    )


def random_net(
    rng: np.random.Generator,
    n_inputs: int,
    hidden_sizes: list[int],
    n_outputs: int,
    scale: float = 1.0,
) -> Ann:
    """Dense random classifier over the unit box; weights scaled by fan-in so
    pre-activation ranges stay moderate."""
    features = _unit_box([f"x{i + 1}" for i in range(n_inputs)])
    sizes = [n_inputs, *hidden_sizes, n_outputs]
    layers = []
    for fan_in, fan_out in zip(sizes, sizes[1:]):
        w = rng.normal(0.0, scale / np.sqrt(fan_in), size=(fan_out, fan_in))
        b = rng.normal(0.0, 0.1 * scale, size=fan_out)
        layers.append(Layer(w, b))
    return Ann(
        name=f"random-{n_inputs}-{'-'.join(map(str, hidden_sizes))}-{n_outputs}",
        features=features,
        layers=layers,
        classes=[f"c{i}" for i in range(n_outputs)],
    )


def bench_net(n_inputs: int = 4, width: int = 20, depth: int = 2, n_outputs: int = 2, seed: int = 7) -> Ann:
    """Deterministic two-hidden-layer network sized for the build-time bench.

    The positive bias offset leaves roughly half the neurons stable over the
    unit box, which is typical of trained classifiers and keeps the exact
    bound-tightening solves at desk scale."""
    rng = np.random.default_rng(seed)
    features = _unit_box([f"x{i + 1}" for i in range(n_inputs)])
    sizes = [n_inputs, *[width] * depth, n_outputs]
    layers = []
    for fan_in, fan_out in zip(sizes, sizes[1:]):
        w = rng.normal(0.0, 0.45 / np.sqrt(fan_in), size=(fan_out, fan_in))
        b = rng.normal(0.2, 0.3, size=fan_out)
        layers.append(Layer(w, b))
    ann = Ann("probe", features, layers, [f"c{i}" for i in range(n_outputs)])
    # Recentre the output biases on the median logit over a probe sample so
    # the decision boundary actually crosses the box.
    from .model import forward, make_instance

    probe = rng.uniform(0.0, 1.0, size=(64, n_inputs))
    logits = np.array([forward(ann, make_instance(features, p))[1] for p in probe])
    shift = np.median(logits, axis=0)
    last = layers[-1]
    layers = layers[:-1] + [Layer(last.weights.copy(), last.bias - shift)]
    return Ann(
        f"bench-{n_inputs}x{width}x{depth}",
        features,
        layers,
        [f"c{i}" for i in range(n_outputs)],
    )
