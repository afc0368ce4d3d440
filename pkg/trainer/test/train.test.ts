import { describe, expect, it } from "vitest";

import { makeConfig, metricsDocument, modelDocument, train } from "../src/train.js";
import { SEPARABLE_SCHEMA, separableTable } from "./helpers.js";

describe("train", () => {
  it("fits the separable fixture above 0.9 validation accuracy", () => {
    const result = train(separableTable(), SEPARABLE_SCHEMA, makeConfig([4], 0));
    expect(result.validationAccuracy).toBeGreaterThan(0.9);
  });

  it("records the stock hyperparameters in the metrics file", () => {
    const config = makeConfig([4], 0);
    const result = train(separableTable(), SEPARABLE_SCHEMA, config);
    const metrics = metricsDocument(config, result);
    expect(metrics.config.batch_size).toBe(4);
    expect(metrics.config.max_epochs).toBe(100);
    expect(metrics.config.patience).toBe(10);
    expect(metrics.config.learning_rate).toBe(0.001);
    expect(metrics.config.validation_split).toBe(0.2);
    expect(metrics.validation_accuracy).toBeGreaterThan(0);
    expect(metrics.best_epoch).toBeGreaterThan(0);
  });

  it("is byte-deterministic for a fixed seed", () => {
    const run = () => {
      const result = train(separableTable(), SEPARABLE_SCHEMA, makeConfig([4], 7));
      return JSON.stringify(modelDocument("toy", result.data.features, result.net, result.data.classes));
    };
    expect(run()).toBe(run());
  });

  it("different seeds give different weights", () => {
    const weights = (seed: number) =>
      JSON.stringify(train(separableTable(), SEPARABLE_SCHEMA, makeConfig([4], seed)).net.layers);
    expect(weights(1)).not.toBe(weights(2));
  });

  it("rejects single-class data", () => {
    const table = {
      header: ["a", "label"],
      rows: [["1", "p"], ["2", "p"], ["3", "p"], ["4", "p"], ["5", "p"]],
    };
    expect(() => train(table, { a: "continuous" }, makeConfig([4], 0))).toThrow(/two classes/);
  });

  it("validates the configuration", () => {
    expect(() => makeConfig([], 0)).toThrow(/hidden/);
    expect(() => makeConfig([4], 0, { batchSize: 0 })).toThrow(/batchSize/);
    expect(() => makeConfig([4], 0, { validationSplit: 1.5 })).toThrow(/split/);
  });
});
