/** Cross-boundary checks against the installed explainer: the exported model
 * must pass its validator, its forward pass must agree per logit, and the
 * preprocessing contract must match column for column. */

import { execFileSync } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import { formatCsv } from "../src/csv.js";
import { Mlp } from "../src/mlp.js";
import { Rng } from "../src/rng.js";
import { makeConfig, modelDocument, train } from "../src/train.js";
import { preprocess } from "../src/preprocess.js";
import { SEPARABLE_SCHEMA, separableTable } from "./helpers.js";

const FORWARD_ORACLE = `
import json, sys
from milpexplain import load_model, make_instance, forward
payload = json.load(sys.stdin)
ann = load_model(open(payload["model"]).read())
out = []
for pt in payload["points"]:
    _, logits = forward(ann, make_instance(ann.features, pt))
    out.append([float(v) for v in logits])
print(json.dumps(out))
`;

const PREPROCESS_ORACLE = `
import csv, io, json, sys
from milpexplain import preprocess_dataset
payload = json.load(sys.stdin)
table = list(csv.reader(io.StringIO(payload["csv"])))
out = preprocess_dataset(table, payload["schema"])
print(json.dumps({
    "features": [
        {"name": f.name, "kind": f.kind, "lower": f.lower, "upper": f.upper}
        for f in out.features
    ],
    "matrix": [[float(v) for v in inst.values] for inst in out.instances],
}))
`;

function python(script: string, payload: unknown): any {
  const raw = execFileSync("python3", ["-c", script], {
    input: JSON.stringify(payload),
    encoding: "utf-8",
  });
  return JSON.parse(raw);
}

function exportModel(dir: string): { path: string; net: Mlp; features: any[] } {
  const result = train(separableTable(), SEPARABLE_SCHEMA, makeConfig([4], 11));
  const doc = modelDocument("toy", result.data.features, result.net, result.data.classes);
  const path = join(dir, "toy.json");
  writeFileSync(path, JSON.stringify(doc, null, 2) + "\n");
  return { path, net: result.net, features: result.data.features };
}

describe("round trip with the explainer", () => {
  it("exported model passes the validator CLI", () => {
    const dir = mkdtempSync(join(tmpdir(), "trainer-"));
    const { path } = exportModel(dir);
    const out = execFileSync("milpexplain", ["validate", path], { encoding: "utf-8" });
    expect(out).toContain("2 -> 4 -> 2");
  });

  it("forward passes agree within 1e-5 per logit on 100 points", () => {
    const dir = mkdtempSync(join(tmpdir(), "trainer-"));
    const { path, net, features } = exportModel(dir);
    const rng = new Rng(99);
    const points = Array.from({ length: 100 }, () =>
      features.map((f) =>
        f.kind === "continuous" ? f.lower + rng.next() * (f.upper - f.lower) : rng.int(f.lower, f.upper),
      ),
    );
    const reference: number[][] = python(FORWARD_ORACLE, { model: path, points });
    for (let i = 0; i < points.length; i++) {
      const mine = net.logits(points[i]);
      for (let j = 0; j < mine.length; j++) {
        expect(Math.abs(mine[j] - reference[i][j])).toBeLessThanOrEqual(1e-5);
      }
    }
  });

  it("preprocessing matches the explainer contract column for column", () => {
    const header = ["temp", "count", "color", "label"];
    const rows = [
      ["12.5", "3", "red", "p"],
      ["20.0", "1", "blue", "q"],
      ["15.0", "4", "red", "p"],
      ["12.5", "2", "green", "q"],
    ];
    const schema = { temp: "continuous", count: "integer", color: "categorical" } as const;
    const mine = preprocess({ header, rows }, schema);
    const reference = python(PREPROCESS_ORACLE, {
      csv: formatCsv(header, rows),
      schema,
    });
    expect(
      mine.features.map((f) => ({ name: f.name, kind: f.kind, lower: f.lower, upper: f.upper })),
    ).toEqual(reference.features);
    expect(mine.matrix).toEqual(reference.matrix);
  });
});
