/** Tabular preprocessing matching the explainer's contract exactly:
 * categorical columns expand to one-hot binaries (categories in first
 * appearance order), continuous columns min-max scale to [0, 1] (constant
 * columns map to 0), integer columns stay untouched so their domains remain
 * discrete. The `label` column provides class names.
 */

import { Table } from "./csv.js";

export type ColumnKind = "continuous" | "integer" | "categorical";

export interface FeatureSpec {
  name: string;
  kind: "continuous" | "integer" | "binary";
  lower: number;
  upper: number;
}

export interface Preprocessed {
  features: FeatureSpec[];
  matrix: number[][]; // rows x features
  labels: string[];
  classes: string[]; // first appearance order
  classIndex: number[]; // per row
}

export function preprocess(table: Table, schema: Record<string, ColumnKind>): Preprocessed {
  const labelCol = table.header.indexOf("label");
  if (labelCol < 0) {
    throw new Error("training data needs a label column");
  }
  for (const name of table.header) {
    if (name === "label") continue;
    const kind = schema[name];
    if (!kind) throw new Error(`column ${name} missing from the schema`);
    if (!["continuous", "integer", "categorical"].includes(kind)) {
      throw new Error(`column ${name}: unknown kind ${kind}`);
    }
  }

  const features: FeatureSpec[] = [];
  const columns: number[][] = [];

  for (let idx = 0; idx < table.header.length; idx++) {
    if (idx === labelCol) continue;
    const name = table.header[idx];
    const raw = table.rows.map((r) => r[idx]);
    const kind = schema[name];

    if (kind === "categorical") {
      const seen: string[] = [];
      for (const cell of raw) {
        if (!seen.includes(cell)) seen.push(cell);
      }
      for (const cat of seen) {
        features.push({ name: `${name}=${cat}`, kind: "binary", lower: 0, upper: 1 });
        columns.push(raw.map((cell) => (cell === cat ? 1 : 0)));
      }
      continue;
    }

    const numeric = raw.map((cell) => {
      const v = Number(cell);
      if (!Number.isFinite(v)) throw new Error(`column ${name}: non-numeric value ${cell}`);
      return v;
    });
    if (kind === "integer") {
      for (const v of numeric) {
        if (!Number.isInteger(v)) throw new Error(`column ${name}: non-integral value ${v}`);
      }
      features.push({
        name,
        kind: "integer",
        lower: Math.min(...numeric),
        upper: Math.max(...numeric),
      });
      columns.push(numeric);
    } else {
      const lo = Math.min(...numeric);
      const span = Math.max(...numeric) - lo;
      const scaled = span === 0 ? numeric.map(() => 0) : numeric.map((v) => (v - lo) / span);
      features.push({ name, kind: "continuous", lower: 0, upper: 1 });
      columns.push(scaled);
    }
  }

  const labels = table.rows.map((r) => r[labelCol]);
  const classes: string[] = [];
  for (const label of labels) {
    if (!classes.includes(label)) classes.push(label);
  }
  const matrix = table.rows.map((_, r) => columns.map((col) => col[r]));
  return {
    features,
    matrix,
    labels,
    classes,
    classIndex: labels.map((l) => classes.indexOf(l)),
  };
}
