import * as tf from "@tensorflow/tfjs";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { bceLossGraph } from "../src/loss.js";
import {
  createHead,
  disposeModel,
  headForward,
  headVariables,
  type FusionModel,
  type Taps,
} from "../src/model.js";
import { makeRng } from "../src/rng.js";
import { bceRef, headForwardRef, varsToF64, type Grid } from "./reference.js";

let head: FusionModel;
let taps: Taps;
let f3Grid: Grid;
let f4Grid: Grid;
let f5Grid: Grid;
let maskF64: Float64Array;
let maskTensor: tf.Tensor4D;

function randomGrid(h: number, w: number, c: number, seed: number): Grid {
  const rng = makeRng(seed);
  const data = new Float64Array(h * w * c);
  for (let i = 0; i < data.length; i++) data[i] = Math.fround((rng() - 0.5) * 2);
  return { h, w, c, data };
}

function gridToTensor(grid: Grid): tf.Tensor4D {
  return tf.tensor4d(Float32Array.from(grid.data), [1, grid.h, grid.w, grid.c]);
}

beforeAll(async () => {
  await tf.setBackend("cpu");
  await tf.ready();
  head = createHead({ c3: 6, c4: 8, c5: 10 }, 13);
  f3Grid = randomGrid(8, 8, 6, 101);
  f4Grid = randomGrid(4, 4, 8, 102);
  f5Grid = randomGrid(2, 2, 10, 103);
  taps = { f3: gridToTensor(f3Grid), f4: gridToTensor(f4Grid), f5: gridToTensor(f5Grid) };
  const maskRng = makeRng(104);
  maskF64 = new Float64Array(64);
  for (let i = 0; i < 64; i++) maskF64[i] = maskRng() < 0.5 ? 0 : 1;
  maskTensor = tf.tensor4d(Float32Array.from(maskF64), [1, 8, 8, 1]);
});

afterAll(() => {
  taps.f3.dispose();
  taps.f4.dispose();
  taps.f5.dispose();
  maskTensor.dispose();
  disposeModel(head);
});

describe("fusion head against the float64 reference", () => {
  it("produces the same forward values", () => {
    const produced = tf.tidy(() => headForward(head, taps).dataSync() as Float32Array);
    const expected = headForwardRef(varsToF64(head), f3Grid, f4Grid, f5Grid);
    expect(produced.length).toBe(expected.data.length);
    let worst = 0;
    for (let i = 0; i < produced.length; i++) {
      worst = Math.max(worst, Math.abs(produced[i] - expected.data[i]));
    }
    expect(worst).toBeLessThan(1e-4);
  });

  it("has analytic gradients matching central differences", () => {
    const { grads } = tf.variableGrads(
      () => bceLossGraph(maskTensor, headForward(head, taps)),
      headVariables(head),
    );

    const table = varsToF64(head);
    const lossAt = () => bceRef(maskF64, headForwardRef(table, f3Grid, f4Grid, f5Grid).data);

    const step = 1e-3;
    const analytic: number[] = [];
    const numeric: number[] = [];
    for (const [name, variable] of head.vars) {
      const gradTensor = grads[variable.name];
      expect(gradTensor).toBeDefined();
      const analyticValues = gradTensor.dataSync() as Float32Array;
      const stored = table.get(name)!;
      const stride = stored.values.length <= 64 ? 4 : Math.ceil(stored.values.length / 16);
      for (let i = 0; i < stored.values.length; i += stride) {
        const saved = stored.values[i];
        stored.values[i] = saved + step;
        const plus = lossAt();
        stored.values[i] = saved - step;
        const minus = lossAt();
        stored.values[i] = saved;
        analytic.push(analyticValues[i]);
        numeric.push((plus - minus) / (2 * step));
      }
    }
    for (const tensor of Object.values(grads)) tensor.dispose();

    expect(analytic.length).toBeGreaterThan(50);
    let diffSq = 0;
    let refSq = 0;
    for (let i = 0; i < analytic.length; i++) {
      diffSq += (analytic[i] - numeric[i]) ** 2;
      refSq += analytic[i] ** 2;
    }
    const relativeError = Math.sqrt(diffSq / refSq);
    expect(relativeError).toBeLessThan(1e-3);
  });
});
