#!/usr/bin/env python3
"""Regenerate the checked-in fixture files (models, datasets, golden LP
exports). Deterministic: reruns must be byte-identical."""

from __future__ import annotations

import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

import milpexplain as mx
from milpexplain import fixtures
from milpexplain.milp import MilpModel, linear

OUT = os.path.join(os.path.dirname(__file__), "..", "fixtures")

MIN_MARGIN = 1e-3


def write(path: str, text: str) -> None:
    full = os.path.join(OUT, path)
    with open(full, "w", encoding="utf-8") as fh:
        fh.write(text)
    print(f"wrote {full}")


def csv_text(ann, rows, labels=None) -> str:
    header = ",".join(f.name for f in ann.features) + (",label" if labels else "")
    lines = [header]
    for k, row in enumerate(rows):
        cells = [f"{v:g}" for v in row]
        if labels:
            cells.append(labels[k])
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def checked_rows(ann, candidates, want, balance=False):
    rows, labels = [], []
    for row in candidates:
        inst = mx.make_instance(ann.features, row)
        if mx.prediction_margin(ann, inst) >= MIN_MARGIN:
            rows.append(row)
            labels.append(ann.classes[mx.predict(ann, inst)])
    if balance:
        by_class = {c: [] for c in ann.classes}
        for row, label in zip(rows, labels):
            by_class[label].append(row)
        rows, labels = [], []
        while len(rows) < want and any(by_class.values()):
            for c in ann.classes:
                if by_class[c] and len(rows) < want:
                    rows.append(by_class[c].pop(0))
                    labels.append(c)
    else:
        rows, labels = rows[:want], labels[:want]
    assert len(rows) == want, f"only {len(rows)} rows with margin >= {MIN_MARGIN}"
    return rows, labels


def gate_rows():
    ann = fixtures.gate_net()
    base = [(0.9, 0.3)]
    xs = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.7, 0.8, 0.95, 1.0]
    ys = [0.25, 0.75]
    cand = base + [(x, y) for y in ys for x in xs if (x, y) != (0.9, 0.3)]
    return ann, *checked_rows(ann, cand, 20)


def tiny_rows():
    ann = fixtures.tiny_net()
    cand = [(1.0, 0.0), (0.0, 1.0)] + [
        (round(a, 2), round(b, 2))
        for a in (0.1, 0.3, 0.5, 0.7, 0.9)
        for b in (0.0, 0.45, 1.0)
        if abs(a - b) >= 0.09
    ]
    return ann, *checked_rows(ann, cand, 16)


def mixed_rows():
    ann = fixtures.mixed_net()
    cand = [
        (flag, count, level)
        for flag in (0.0, 1.0)
        for count in (0.0, 1.0, 2.0, 3.0)
        for level in (0.05, 0.5, 0.95)
    ]
    return ann, *checked_rows(ann, cand, 16, balance=True)


def eq2_model() -> MilpModel:
    """The two-sided range example used as a solver fixture: minimize y1
    subject to a ReLU-style split on 3*x1 - 2 over 1 <= x1 <= 3."""
    m = MilpModel()
    x1 = m.add_variable("continuous", 1.0, 3.0, "x1")
    y1 = m.add_variable("continuous", 0.0, np.inf, "y1")
    s1 = m.add_variable("continuous", 0.0, np.inf, "s1")
    z1 = m.add_variable("binary", 0.0, 1.0, "z1")
    m.add_linear([(3.0, x1), (1.0, s1), (-1.0, y1)], "=", 2.0)
    m.add_linear([(1.0, y1), (-3.0, x1)], "<=", -2.0)
    m.add_linear([(1.0, s1), (-3.0, x1)], "<=", -2.0)
    m.add_indicator(z1, 1, linear([(1.0, y1)], "<=", 0.0))
    m.add_indicator(z1, 0, linear([(1.0, s1)], "<=", 0.0))
    m.set_objective("minimize", [(1.0, y1)])
    return m


def main() -> None:
    os.makedirs(OUT, exist_ok=True)

    for ann in (
        fixtures.gate_net(),
        fixtures.tiny_net(),
        fixtures.shifted_tiny_net(),
        fixtures.mixed_net(),
        fixtures.bench_net(),
    ):
        write(f"{ann.name}.json", mx.dump_model(ann))

    for ann, rows, labels in (gate_rows(), tiny_rows(), mixed_rows()):
        write(f"{ann.name}.csv", csv_text(ann, rows, labels))

    write("eq2.lp", eq2_model().export_lp())

    gate = fixtures.gate_net()
    inst = mx.make_instance(gate.features, [0.9, 0.3])
    for kind in (mx.INDICATOR, mx.BIG_M):
        enc = mx.build_encoding(gate, kind)
        mx.attach_negation(enc, mx.predict(gate, inst))
        for k, vid in enumerate(enc.input_ids):
            v = float(inst.values[k])
            enc.model.set_bounds(vid, v, v)
        write(f"gate_negate_{kind}.lp", enc.model.export_lp())


if __name__ == "__main__":
    main()
