import * as tf from "@tensorflow/tfjs";
import { beforeAll, describe, expect, it } from "vitest";

import { ShapeMismatch } from "../src/errors.js";
import { bceLoss, bceLossGraph } from "../src/loss.js";
import { makeRng } from "../src/rng.js";

beforeAll(async () => {
  await tf.setBackend("cpu");
  await tf.ready();
});

describe("binary cross-entropy", () => {
  it("is ln 2 when the prediction sits at the midpoint", () => {
    expect(Math.abs(bceLoss([1], [0.5]) - Math.LN2)).toBeLessThan(1e-12);
    expect(Math.abs(bceLoss([0], [0.5]) - Math.LN2)).toBeLessThan(1e-12);
    const graph = tf.tidy(() =>
      bceLossGraph(tf.tensor1d([1]), tf.tensor1d([0.5])).dataSync()[0],
    );
    expect(Math.abs(graph - Math.LN2)).toBeLessThan(1e-6);
  });

  it("is essentially zero for a perfect clamped prediction", () => {
    const loss = bceLoss([1, 0], [1, 0]);
    expect(loss).toBeGreaterThan(0);
    expect(loss).toBeLessThan(1e-6);
  });

  it("matches an elementwise summation oracle on random 4x4 pairs", () => {
    const rng = makeRng(23);
    for (let round = 0; round < 10; round++) {
      const truth = new Float64Array(16);
      const predicted = new Float64Array(16);
      for (let i = 0; i < 16; i++) {
        truth[i] = rng() < 0.5 ? 0 : 1;
        predicted[i] = 0.01 + rng() * 0.98;
      }
      // independent oracle: accumulate every pixel's term, divide once
      let expected = 0;
      for (let i = 0; i < 16; i++) {
        expected += -(truth[i] * Math.log(predicted[i]) + (1 - truth[i]) * Math.log(1 - predicted[i]));
      }
      expected /= 16;
      expect(Math.abs(bceLoss(truth, predicted) - expected)).toBeLessThan(1e-9);
    }
  });

  it("agrees between graph and float64 forms within float32 noise", () => {
    const rng = makeRng(31);
    const truth = new Float64Array(64);
    const predicted = new Float64Array(64);
    for (let i = 0; i < 64; i++) {
      truth[i] = rng() < 0.5 ? 0 : 1;
      predicted[i] = 0.05 + rng() * 0.9;
    }
    const graph = tf.tidy(() =>
      bceLossGraph(
        tf.tensor1d(Float32Array.from(truth)),
        tf.tensor1d(Float32Array.from(predicted)),
      ).dataSync()[0],
    );
    expect(Math.abs(graph - bceLoss(truth, predicted))).toBeLessThan(1e-5);
  });

  it("rejects mismatched shapes in both forms", () => {
    expect(() => bceLoss([1, 0], [0.5])).toThrow(ShapeMismatch);
    expect(() =>
      tf.tidy(() => bceLossGraph(tf.tensor1d([1, 0]), tf.tensor2d([[0.5, 0.5]]))),
    ).toThrow(ShapeMismatch);
    expect(() => bceLoss([], [])).toThrow(ShapeMismatch);
  });

  it("is never negative", () => {
    const rng = makeRng(47);
    for (let round = 0; round < 50; round++) {
      const truth = [rng() < 0.5 ? 0 : 1, rng() < 0.5 ? 0 : 1, rng() < 0.5 ? 0 : 1];
      const predicted = [rng(), rng(), rng()];
      expect(bceLoss(truth, predicted)).toBeGreaterThanOrEqual(0);
    }
  });
});
