import numpy as np
import pytest

import milpexplain as mx
from milpexplain import fixtures
from milpexplain.errors import ValidationError
from milpexplain.milp import MilpModel, linear, max_violation

from conftest import read_fixture, synthetic_bounds


def test_variable_ids_dense_and_ordered():
    m = MilpModel()
    ids = [m.add_variable("continuous", 0, 1, f"v{i}") for i in range(5)]
    assert ids == [0, 1, 2, 3, 4]
    assert [v.index for v in m.variables] == ids


def test_add_variable_rejects_bad_bounds():
    m = MilpModel()
    with pytest.raises(ValidationError):
        m.add_variable("continuous", 2.0, 1.0, "x")
    with pytest.raises(ValidationError):
        m.add_variable("binary", 0.0, 2.0, "z")
    with pytest.raises(ValidationError):
        m.add_variable("unknown", 0.0, 1.0, "x")


def test_add_constraint_validation():
    m = MilpModel()
    x = m.add_variable("continuous", 0, 1, "x")
    y = m.add_variable("continuous", 0, 1, "y")
    m.add_linear([(1.0, x), (1.0, y)], "<=", 1.0)
    with pytest.raises(ValidationError, match="duplicate"):
        linear([(1.0, x), (2.0, x)], "<=", 1.0)
    with pytest.raises(ValidationError, match="unknown variable"):
        m.add_linear([(1.0, 99)], "<=", 1.0)


def test_add_indicator_requires_binary():
    m = MilpModel()
    x = m.add_variable("continuous", 0, 1, "x")
    z = m.add_variable("binary", 0, 1, "z")
    m.add_indicator(z, 1, linear([(1.0, x)], "<=", 0.0))
    with pytest.raises(ValidationError, match="not binary"):
        m.add_indicator(x, 1, linear([(1.0, x)], "<=", 0.0))
    with pytest.raises(ValidationError, match="active value"):
        m.add_indicator(z, 2, linear([(1.0, x)], "<=", 0.0))


def test_set_bounds_round_trip_restores_export():
    m = MilpModel()
    x = m.add_variable("continuous", 0, 1, "x")
    m.add_linear([(1.0, x)], "<=", 0.9)
    before = m.export_lp()
    previous = m.set_bounds(x, 0.9, 0.9)
    assert previous == (0.0, 1.0)
    assert m.export_lp() != before
    m.set_bounds(x, *previous)
    assert m.export_lp() == before


def test_set_bounds_rejects_inverted():
    m = MilpModel()
    x = m.add_variable("continuous", 0, 1, "x")
    with pytest.raises(ValidationError):
        m.set_bounds(x, 2.0, 1.0)


def test_export_empty_model():
    assert MilpModel().export_lp() == (
        "Minimize\n obj:\nSubject To\nBounds\nBinary\nGeneral\nEnd\n"
    )


def test_export_matches_goldens():
    make_fixtures = _load_fixture_tool()
    assert make_fixtures.eq2_model().export_lp() == read_fixture("eq2.lp")

    gate = fixtures.gate_net()
    inst = mx.make_instance(gate.features, [0.9, 0.3])
    for kind, name in ((mx.INDICATOR, "gate_negate_indicator.lp"), (mx.BIG_M, "gate_negate_bigm.lp")):
        enc = mx.build_encoding(gate, kind)
        mx.attach_negation(enc, mx.predict(gate, inst))
        for k, vid in enumerate(enc.input_ids):
            v = float(inst.values[k])
            enc.model.set_bounds(vid, v, v)
        assert enc.model.export_lp() == read_fixture(name)


def _load_fixture_tool():
    import importlib.util
    import os

    path = os.path.join(os.path.dirname(__file__), "..", "tools", "make_fixtures.py")
    spec = importlib.util.spec_from_file_location("make_fixtures", path)
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    return mod


def test_export_deterministic():
    def build():
        m = MilpModel()
        x = m.add_variable("continuous", 0, 1, "x")
        z = m.add_variable("binary", 0, 1, "z")
        m.add_linear([(0.1, x), (-2.5, z)], ">=", -1.0)
        m.add_indicator(z, 0, linear([(1.0, x)], "<=", 0.25))
        m.set_objective("maximize", [(1.0, x)])
        return m

    assert build().export_lp() == build().export_lp()
    m = build()
    assert m.export_lp() == m.export_lp()


def test_export_injective_on_fixture_corpus():
    corpus = [MilpModel()]
    for ann in (fixtures.gate_net(), fixtures.tiny_net(), fixtures.mixed_net()):
        for kind in (mx.INDICATOR, mx.BIG_M):
            corpus.append(mx.encode_bigm(ann, synthetic_bounds(ann)).model
                          if kind == mx.BIG_M
                          else mx.encode_indicator(ann, synthetic_bounds(ann)).model)
    texts = [m.export_lp() for m in corpus]
    assert len(set(texts)) == len(texts)


def test_export_17_digit_round_trip():
    m = MilpModel()
    x = m.add_variable("continuous", 0, 1, "x")
    coef = 0.1 + 0.2  # 0.30000000000000004
    m.add_linear([(coef, x)], "<=", 1.0 / 3.0)
    text = m.export_lp()
    assert "0.30000000000000004" in text
    assert "0.33333333333333331" in text


def test_max_violation_reports_indicator_breaks():
    m = MilpModel()
    x = m.add_variable("continuous", 0, 1, "x")
    z = m.add_variable("binary", 0, 1, "z")
    m.add_indicator(z, 1, linear([(1.0, x)], "<=", 0.0))
    ok = np.array([0.4, 0.0])
    bad = np.array([0.4, 1.0])
    assert max_violation(m, ok) == 0.0
    assert max_violation(m, bad) == pytest.approx(0.4)
