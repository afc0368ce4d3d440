/** Feedforward ReLU classifier with softmax cross-entropy training via Adam.
 * Plain number[][] weights keep the math readable and exactly reproducible.
 */

import { Rng } from "./rng.js";

export interface LayerParams {
  weights: number[][]; // out x in
  bias: number[];
}

export class Mlp {
  layers: LayerParams[];

  constructor(layers: LayerParams[]) {
    this.layers = layers;
  }

  /** He-initialized network: hidden layers ReLU, last layer linear. */
  static init(sizes: number[], rng: Rng): Mlp {
    const layers: LayerParams[] = [];
    for (let l = 0; l + 1 < sizes.length; l++) {
      const fanIn = sizes[l];
      const scale = Math.sqrt(2 / fanIn);
      layers.push({
        weights: Array.from({ length: sizes[l + 1] }, () =>
          Array.from({ length: fanIn }, () => rng.normal() * scale),
        ),
        bias: Array.from({ length: sizes[l + 1] }, () => 0),
      });
    }
    return new Mlp(layers);
  }

  /** Per-layer post-activation values; the last entry is the raw logits. */
  forwardAll(input: number[]): number[][] {
    const values: number[][] = [];
    let x = input;
    for (let l = 0; l < this.layers.length; l++) {
      const { weights, bias } = this.layers[l];
      const out = weights.map(
        (row, i) => row.reduce((acc, w, j) => acc + w * x[j], 0) + bias[i],
      );
      x = l < this.layers.length - 1 ? out.map((v) => Math.max(0, v)) : out;
      values.push(x);
    }
    return values;
  }

  logits(input: number[]): number[] {
    const values = this.forwardAll(input);
    return values[values.length - 1];
  }

  /** Argmax with lowest-index tie break, matching the explainer. */
  predict(input: number[]): number {
    const o = this.logits(input);
    let best = 0;
    for (let i = 1; i < o.length; i++) {
      if (o[i] > o[best]) best = i;
    }
    return best;
  }

  clone(): Mlp {
    return new Mlp(
      this.layers.map((l) => ({
        weights: l.weights.map((row) => [...row]),
        bias: [...l.bias],
      })),
    );
  }
}

export function softmax(logits: number[]): number[] {
  const top = Math.max(...logits);
  const exps = logits.map((v) => Math.exp(v - top));
  const total = exps.reduce((a, b) => a + b, 0);
  return exps.map((e) => e / total);
}

export function crossEntropy(logits: number[], target: number): number {
  const top = Math.max(...logits);
  const logSum = top + Math.log(logits.reduce((a, v) => a + Math.exp(v - top), 0));
  return logSum - logits[target];
}

export interface Gradients {
  weights: number[][][];
  bias: number[][];
}

export function zeroGradients(net: Mlp): Gradients {
  return {
    weights: net.layers.map((l) => l.weights.map((row) => row.map(() => 0))),
    bias: net.layers.map((l) => l.bias.map(() => 0)),
  };
}

/** Accumulate d(cross-entropy)/d(params) for one sample into grads. */
export function accumulateGradients(
  net: Mlp,
  input: number[],
  target: number,
  grads: Gradients,
): void {
  const values = net.forwardAll(input);
  const last = net.layers.length - 1;
  let delta = softmax(values[last]).map((p, i) => p - (i === target ? 1 : 0));
  for (let l = last; l >= 0; l--) {
    const below = l === 0 ? input : values[l - 1];
    const { weights } = net.layers[l];
    for (let i = 0; i < weights.length; i++) {
      const d = delta[i];
      grads.bias[l][i] += d;
      const row = grads.weights[l][i];
      for (let j = 0; j < below.length; j++) {
        row[j] += d * below[j];
      }
    }
    if (l > 0) {
      const next = new Array(below.length).fill(0);
      for (let j = 0; j < below.length; j++) {
        if (below[j] <= 0) continue; // ReLU gate
        let acc = 0;
        for (let i = 0; i < weights.length; i++) {
          acc += weights[i][j] * delta[i];
        }
        next[j] = acc;
      }
      delta = next;
    }
  }
}

/** Adam optimizer state over the network's parameter tensors. */
export class Adam {
  private m: Gradients;
  private v: Gradients;
  private step = 0;

  constructor(
    net: Mlp,
    private readonly lr: number,
    private readonly beta1 = 0.9,
    private readonly beta2 = 0.999,
    private readonly eps = 1e-8,
  ) {
    this.m = zeroGradients(net);
    this.v = zeroGradients(net);
  }

  apply(net: Mlp, grads: Gradients): void {
    this.step += 1;
    const c1 = 1 - Math.pow(this.beta1, this.step);
    const c2 = 1 - Math.pow(this.beta2, this.step);
    for (let l = 0; l < net.layers.length; l++) {
      const { weights, bias } = net.layers[l];
      for (let i = 0; i < weights.length; i++) {
        for (let j = 0; j < weights[i].length; j++) {
          const g = grads.weights[l][i][j];
          const m = (this.m.weights[l][i][j] =
            this.beta1 * this.m.weights[l][i][j] + (1 - this.beta1) * g);
          const v = (this.v.weights[l][i][j] =
            this.beta2 * this.v.weights[l][i][j] + (1 - this.beta2) * g * g);
          weights[i][j] -= (this.lr * (m / c1)) / (Math.sqrt(v / c2) + this.eps);
        }
        const g = grads.bias[l][i];
        const m = (this.m.bias[l][i] = this.beta1 * this.m.bias[l][i] + (1 - this.beta1) * g);
        const v = (this.v.bias[l][i] =
          this.beta2 * this.v.bias[l][i] + (1 - this.beta2) * g * g);
        bias[i] -= (this.lr * (m / c1)) / (Math.sqrt(v / c2) + this.eps);
      }
    }
  }
}
