/** Minimal delimited-text reading/writing for the plain comma dialect the
 * explainer uses (no quoting, header row first). */

export interface Table {
  header: string[];
  rows: string[][];
}

export function parseCsv(text: string): Table {
  const lines = text
    .split(/\r?\n/)
    .map((l) => l.trim())
    .filter((l) => l.length > 0);
  if (lines.length < 2) {
    throw new Error("dataset needs a header row and at least one data row");
  }
  const header = lines[0].split(",").map((c) => c.trim());
  const rows = lines.slice(1).map((line, i) => {
    const cells = line.split(",").map((c) => c.trim());
    if (cells.length !== header.length) {
      throw new Error(`line ${i + 2}: expected ${header.length} cells, got ${cells.length}`);
    }
    return cells;
  });
  return { header, rows };
}

export function formatCsv(header: string[], rows: (string | number)[][]): string {
  const lines = [header.join(",")];
  for (const row of rows) {
    lines.push(row.map((v) => (typeof v === "number" ? String(v) : v)).join(","));
  }
  return lines.join("\n") + "\n";
}
