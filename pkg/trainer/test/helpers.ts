import { Rng } from "../src/rng.js";
import { Table } from "../src/csv.js";

/** Linearly separable two-feature toy set: label by which side of x + y = 1
 * the point falls on, with a margin band excluded. Deterministic. */
export function separableTable(rows = 80, seed = 123): Table {
  const rng = new Rng(seed);
  const out: string[][] = [];
  while (out.length < rows) {
    const x = rng.next();
    const y = rng.next();
    const side = x + y - 1;
    if (Math.abs(side) < 0.2) continue;
    out.push([x.toFixed(6), y.toFixed(6), side > 0 ? "pos" : "neg"]);
  }
  return { header: ["x", "y", "label"], rows: out };
}

export const SEPARABLE_SCHEMA = { x: "continuous", y: "continuous" } as const;
