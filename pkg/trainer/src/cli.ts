/** Command line: train on a labelled CSV and export model/metrics/processed
 * files the explainer can consume directly.
 *
 *   node dist/cli.js DATASET.csv SCHEMA.json --hidden 8,4 --seed 0 \
 *     --out-model model.json --out-metrics metrics.json [--out-processed processed.csv]
 *
 * SCHEMA.json maps each column name to continuous | integer | categorical.
 */

import { readFileSync, writeFileSync } from "node:fs";
import { basename } from "node:path";

import { formatCsv, parseCsv } from "./csv.js";
import { ColumnKind } from "./preprocess.js";
import { makeConfig, metricsDocument, modelDocument, train, TrainConfig } from "./train.js";

interface Args {
  dataset: string;
  schema: string;
  hidden: number[];
  seed: number;
  outModel: string;
  outMetrics: string;
  outProcessed?: string;
  overrides: Partial<TrainConfig>;
}

function parseArgs(argv: string[]): Args {
  const positional: string[] = [];
  const flags = new Map<string, string>();
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (arg.startsWith("--")) {
      flags.set(arg.slice(2), argv[++i]);
    } else {
      positional.push(arg);
    }
  }
  if (positional.length !== 2) {
    throw new Error("usage: cli.js DATASET.csv SCHEMA.json [flags]");
  }
  const overrides: Partial<TrainConfig> = {};
  if (flags.has("batch-size")) overrides.batchSize = Number(flags.get("batch-size"));
  if (flags.has("max-epochs")) overrides.maxEpochs = Number(flags.get("max-epochs"));
  if (flags.has("patience")) overrides.patience = Number(flags.get("patience"));
  if (flags.has("learning-rate")) overrides.learningRate = Number(flags.get("learning-rate"));
  if (flags.has("validation-split")) overrides.validationSplit = Number(flags.get("validation-split"));
  return {
    dataset: positional[0],
    schema: positional[1],
    hidden: (flags.get("hidden") ?? "4").split(",").map(Number),
    seed: Number(flags.get("seed") ?? "0"),
    outModel: flags.get("out-model") ?? "model.json",
    outMetrics: flags.get("out-metrics") ?? "metrics.json",
    outProcessed: flags.get("out-processed"),
    overrides,
  };
}

export function main(argv: string[]): number {
  const args = parseArgs(argv);
  const table = parseCsv(readFileSync(args.dataset, "utf-8"));
  const schema = JSON.parse(readFileSync(args.schema, "utf-8")) as Record<string, ColumnKind>;
  const config = makeConfig(args.hidden, args.seed, args.overrides);
  const result = train(table, schema, config);

  const name = basename(args.dataset).replace(/\.[^.]*$/, "");
  const model = modelDocument(name, result.data.features, result.net, result.data.classes);
  writeFileSync(args.outModel, JSON.stringify(model, null, 2) + "\n");
  writeFileSync(args.outMetrics, JSON.stringify(metricsDocument(config, result), null, 2) + "\n");
  if (args.outProcessed) {
    const header = [...result.data.features.map((f) => f.name), "label"];
    const rows = result.data.matrix.map((row, i) => [...row, result.data.labels[i]]);
    writeFileSync(args.outProcessed, formatCsv(header, rows));
  }
  console.log(
    `trained ${name}: validation accuracy ${result.validationAccuracy.toFixed(3)} ` +
      `(best epoch ${result.bestEpoch}/${result.epochsRun})`,
  );
  console.log(`wrote ${args.outModel} and ${args.outMetrics}`);
  return 0;
}

if (import.meta.url === `file://${process.argv[1]}`) {
  try {
    process.exit(main(process.argv.slice(2)));
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    process.exit(2);
  }
}
