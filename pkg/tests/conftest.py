import os

import numpy as np
import pytest

import milpexplain as mx
from milpexplain import fixtures
from milpexplain.encoding import NeuronBounds, OutputBounds

FIXTURES = os.path.join(os.path.dirname(__file__), "..", "fixtures")


def fixture_path(name: str) -> str:
    return os.path.join(FIXTURES, name)


def read_fixture(name: str) -> str:
    with open(fixture_path(name), "r", encoding="utf-8") as fh:
        return fh.read()


def dataset_instances(ann, name):
    return mx.parse_dataset(read_fixture(name), ann)


def random_point(rng, features):
    values = []
    for f in features:
        if f.kind == "continuous":
            values.append(rng.uniform(f.lower, f.upper))
        else:
            values.append(float(rng.integers(int(f.lower), int(f.upper) + 1)))
    return mx.make_instance(features, values)


def point_with_margin(rng, ann, minimum=1e-3, tries=200):
    for _ in range(tries):
        inst = random_point(rng, ann.features)
        if mx.prediction_margin(ann, inst) >= minimum:
            return inst
    raise AssertionError("could not sample a point with a usable margin")


@pytest.fixture
def gate():
    return fixtures.gate_net()


@pytest.fixture
def tiny():
    return fixtures.tiny_net()


@pytest.fixture
def mixed():
    return fixtures.mixed_net()


def random_mixed_net(rng, n_inputs, hidden_sizes, n_outputs):
    """Random classifier over a mix of continuous, integer, and binary
    features; weights scaled by fan-in."""
    kinds = [rng.choice(["continuous", "integer", "binary"]) for _ in range(n_inputs)]
    features = []
    for i, kind in enumerate(kinds):
        if kind == "continuous":
            features.append(mx.FeatureSpec(f"f{i}", "continuous", 0.0, 1.0))
        elif kind == "binary":
            features.append(mx.FeatureSpec(f"f{i}", "binary", 0.0, 1.0))
        else:
            features.append(mx.FeatureSpec(f"f{i}", "integer", 0.0, float(rng.integers(1, 4))))
    sizes = [n_inputs, *hidden_sizes, n_outputs]
    layers = []
    for fan_in, fan_out in zip(sizes, sizes[1:]):
        w = rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=(fan_out, fan_in))
        b = rng.normal(0.0, 0.1, size=fan_out)
        layers.append(mx.Layer(w, b))
    return mx.Ann("mixed-random", features, layers, [f"c{i}" for i in range(n_outputs)])


def synthetic_bounds(ann, spread=1.0):
    """Structurally valid bounds with every neuron split; used where only the
    shape of the encoding matters."""
    hidden = [
        [NeuronBounds(-spread, spread) for _ in range(layer.weights.shape[0])]
        for layer in ann.layers[:-1]
    ]
    outputs = [OutputBounds(-10.0 * spread, 10.0 * spread) for _ in ann.classes]
    return mx.NetworkBounds(hidden, outputs, 0.0)
