/** Training pipeline: preprocess a labelled CSV, fit a small ReLU classifier
 * with Adam and early stopping, and export the explainer-compatible model
 * document plus a metrics file. Deterministic for a given seed.
 */

import { Table } from "./csv.js";
import { Adam, accumulateGradients, crossEntropy, Mlp, zeroGradients } from "./mlp.js";
import { ColumnKind, FeatureSpec, preprocess, Preprocessed } from "./preprocess.js";
import { Rng } from "./rng.js";

export interface TrainConfig {
  hiddenSizes: number[];
  batchSize: number;
  maxEpochs: number;
  patience: number;
  learningRate: number;
  validationSplit: number;
  seed: number;
}

export const DEFAULT_CONFIG: Omit<TrainConfig, "hiddenSizes" | "seed"> = {
  batchSize: 4,
  maxEpochs: 100,
  patience: 10,
  learningRate: 0.001,
  validationSplit: 0.2,
};

export function makeConfig(hiddenSizes: number[], seed: number, overrides: Partial<TrainConfig> = {}): TrainConfig {
  const config = { ...DEFAULT_CONFIG, hiddenSizes, seed, ...overrides };
  validateConfig(config);
  return config;
}

export function validateConfig(config: TrainConfig): void {
  if (config.hiddenSizes.length === 0 || config.hiddenSizes.some((h) => h <= 0)) {
    throw new Error("hidden sizes must be positive");
  }
  for (const key of ["batchSize", "maxEpochs", "patience", "learningRate"] as const) {
    if (config[key] <= 0) throw new Error(`${key} must be positive`);
  }
  if (!(config.validationSplit > 0 && config.validationSplit < 1)) {
    throw new Error("validation split must lie in (0, 1)");
  }
}

export interface TrainResult {
  net: Mlp;
  data: Preprocessed;
  validationAccuracy: number;
  validationLoss: number;
  epochsRun: number;
  bestEpoch: number;
}

export function train(table: Table, schema: Record<string, ColumnKind>, config: TrainConfig): TrainResult {
  validateConfig(config);
  const data = preprocess(table, schema);
  if (data.classes.length < 2) {
    throw new Error("degenerate data: training needs at least two classes");
  }

  const rng = new Rng(config.seed);
  const order = data.matrix.map((_, i) => i);
  rng.shuffle(order);
  const cut = Math.max(1, Math.round(order.length * (1 - config.validationSplit)));
  if (cut >= order.length) {
    throw new Error("dataset too small for the requested validation split");
  }
  const trainIdx = order.slice(0, cut);
  const valIdx = order.slice(cut);

  const sizes = [data.features.length, ...config.hiddenSizes, data.classes.length];
  const net = Mlp.init(sizes, rng);
  const adam = new Adam(net, config.learningRate);

  const valLoss = () =>
    valIdx.reduce((acc, i) => acc + crossEntropy(net.logits(data.matrix[i]), data.classIndex[i]), 0) /
    valIdx.length;

  let best = net.clone();
  let bestLoss = valLoss();
  let bestEpoch = 0;
  let sinceBest = 0;
  let epochsRun = 0;

  for (let epoch = 1; epoch <= config.maxEpochs; epoch++) {
    epochsRun = epoch;
    rng.shuffle(trainIdx);
    for (let start = 0; start < trainIdx.length; start += config.batchSize) {
      const batch = trainIdx.slice(start, start + config.batchSize);
      const grads = zeroGradients(net);
      for (const i of batch) {
        accumulateGradients(net, data.matrix[i], data.classIndex[i], grads);
      }
      const inv = 1 / batch.length;
      grads.weights.forEach((layer) => layer.forEach((row) => row.forEach((_, j) => (row[j] *= inv))));
      grads.bias.forEach((layer) => layer.forEach((_, i) => (layer[i] *= inv)));
      adam.apply(net, grads);
    }
    const loss = valLoss();
    if (!Number.isFinite(loss)) {
      throw new Error(`training diverged at epoch ${epoch} (non-finite validation loss)`);
    }
    if (loss < bestLoss) {
      bestLoss = loss;
      best = net.clone();
      bestEpoch = epoch;
      sinceBest = 0;
    } else {
      sinceBest += 1;
      if (sinceBest >= config.patience) break;
    }
  }

  const chosen = best;
  let correct = 0;
  for (const i of valIdx) {
    if (chosen.predict(data.matrix[i]) === data.classIndex[i]) correct += 1;
  }
  return {
    net: chosen,
    data,
    validationAccuracy: correct / valIdx.length,
    validationLoss: bestLoss,
    epochsRun,
    bestEpoch,
  };
}

/** Explainer model-file document. JSON.stringify emits shortest-round-trip
 * float literals, so every 64-bit weight survives the file boundary. */
export function modelDocument(name: string, features: FeatureSpec[], net: Mlp, classes: string[]) {
  return {
    name,
    features: features.map((f) => ({ name: f.name, kind: f.kind, lower: f.lower, upper: f.upper })),
    layers: net.layers.map((l) => ({
      weights: l.weights.map((row) => [...row]),
      bias: [...l.bias],
    })),
    classes: [...classes],
  };
}

export function metricsDocument(config: TrainConfig, result: TrainResult) {
  return {
    config: {
      hidden_sizes: config.hiddenSizes,
      batch_size: config.batchSize,
      max_epochs: config.maxEpochs,
      patience: config.patience,
      learning_rate: config.learningRate,
      validation_split: config.validationSplit,
      seed: config.seed,
      loss: "softmax cross-entropy",
    },
    validation_accuracy: result.validationAccuracy,
    validation_loss: result.validationLoss,
    epochs_run: result.epochsRun,
    best_epoch: result.bestEpoch,
  };
}
