import * as tf from "@tensorflow/tfjs";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ShapeMismatch } from "../src/errors.js";
import {
  backboneForward,
  createHead,
  createModel,
  disposeModel,
  fuse,
  fusionTensor,
  FUSION_WIDTH,
  headForward,
  predictMap,
  validateConfig,
  type FusionModel,
} from "../src/model.js";
import { makeRng } from "../src/rng.js";

beforeAll(async () => {
  await tf.setBackend("cpu");
  await tf.ready();
});

function randomImage(width: number, height: number, seed: number): Uint8Array {
  const rng = makeRng(seed);
  const data = new Uint8Array(width * height * 3);
  for (let i = 0; i < data.length; i++) data[i] = Math.floor(rng() * 256);
  return data;
}

describe("fusion ops on a small head", () => {
  let head: FusionModel;

  beforeAll(() => {
    head = createHead({ c3: 6, c4: 8, c5: 10 }, 3);
  });

  afterAll(() => {
    disposeModel(head);
  });

  it("fuses a pair into refined-plus-coarser channels at the finer resolution", () => {
    tf.tidy(() => {
      const finer = tf.randomUniform([1, 8, 8, 6]) as tf.Tensor4D;
      const coarser = tf.randomUniform([1, 4, 4, 8]) as tf.Tensor4D;
      const fused = fuse(head, "34", finer, coarser);
      expect(fused.shape).toEqual([1, 8, 8, FUSION_WIDTH + 8]);
    });
  });

  it("rejects a pair at equal resolution", () => {
    tf.tidy(() => {
      const a = tf.randomUniform([1, 8, 8, 6]) as tf.Tensor4D;
      const b = tf.randomUniform([1, 8, 8, 8]) as tf.Tensor4D;
      expect(() => fuse(head, "34", a, b)).toThrow(ShapeMismatch);
    });
  });

  it("rejects a broken resolution ladder in the stacking step", () => {
    tf.tidy(() => {
      const fc2 = tf.randomUniform([1, 8, 8, FUSION_WIDTH + 8]) as tf.Tensor4D;
      const fc1 = tf.randomUniform([1, 4, 4, FUSION_WIDTH + 10]) as tf.Tensor4D;
      const wrongDeep = tf.randomUniform([1, 4, 4, 10]) as tf.Tensor4D;
      expect(() => fusionTensor(head, fc2, fc1, wrongDeep)).toThrow(ShapeMismatch);
    });
  });

  it("always stacks exactly three channels", () => {
    tf.tidy(() => {
      const f3 = tf.randomUniform([1, 8, 8, 6]) as tf.Tensor4D;
      const f4 = tf.randomUniform([1, 4, 4, 8]) as tf.Tensor4D;
      const f5 = tf.randomUniform([1, 2, 2, 10]) as tf.Tensor4D;
      const stacked = fusionTensor(head, fuse(head, "34", f3, f4), fuse(head, "45", f4, f5), f5);
      expect(stacked.shape).toEqual([1, 8, 8, 3]);
      const map = headForward(head, { f3, f4, f5 });
      expect(map.shape).toEqual([1, 8, 8, 1]);
      const values = map.dataSync();
      for (const v of values) {
        expect(v).toBeGreaterThan(0);
        expect(v).toBeLessThan(1);
      }
    });
  });
});

describe("small full network", () => {
  let model: FusionModel;

  beforeAll(() => {
    model = createModel({ side: 32, seed: 5 });
  });

  afterAll(() => {
    disposeModel(model);
  });

  it("taps the backbone at quarter, eighth and sixteenth resolution", () => {
    tf.tidy(() => {
      const image = tf.randomUniform([1, 32, 32, 3]) as tf.Tensor4D;
      const taps = backboneForward(model, image);
      expect(taps.f3.shape).toEqual([1, 8, 8, 256]);
      expect(taps.f4.shape).toEqual([1, 4, 4, 512]);
      expect(taps.f5.shape).toEqual([1, 2, 2, 512]);
      const stacked = fusionTensor(
        model,
        fuse(model, "34", taps.f3, taps.f4),
        fuse(model, "45", taps.f4, taps.f5),
        taps.f5,
      );
      // side 32 in, stacked tensor at side 8: a quarter of the input
      expect(stacked.shape).toEqual([1, 8, 8, 3]);
    });
  });

  it("maps a rectangular image back to its own dimensions, all values interior", () => {
    const map = predictMap(model, 40, 24, randomImage(40, 24, 77));
    expect(map.width).toBe(40);
    expect(map.height).toBe(24);
    expect(map.values.length).toBe(40 * 24);
    for (const v of map.values) {
      expect(v).toBeGreaterThan(0);
      expect(v).toBeLessThan(1);
    }
  });

  it("is deterministic across repeated forward passes", () => {
    const image = randomImage(20, 20, 78);
    const first = predictMap(model, 20, 20, image);
    const second = predictMap(model, 20, 20, image);
    expect(Buffer.from(first.values.buffer).equals(Buffer.from(second.values.buffer))).toBe(true);
  });

  it("rejects input sides that are not positive multiples of sixteen", () => {
    expect(() => validateConfig({ side: 15, seed: 1 })).toThrow(ShapeMismatch);
    expect(() => validateConfig({ side: 0, seed: 1 })).toThrow(ShapeMismatch);
    expect(() => validateConfig({ side: 40, seed: 1 })).toThrow(ShapeMismatch);
  });
});

describe("full-scale resolution chain", () => {
  it(
    "matches the documented progression at input side 224",
    { timeout: 900_000 },
    () => {
      const model = createModel({ side: 224, seed: 9 });
      try {
        const outcome = tf.tidy(() => {
          const image = tf.randomUniform([1, 224, 224, 3]) as tf.Tensor4D;
          const taps = backboneForward(model, image);
          const fc2 = fuse(model, "34", taps.f3, taps.f4);
          const fc1 = fuse(model, "45", taps.f4, taps.f5);
          const stacked = fusionTensor(model, fc2, fc1, taps.f5);
          const map = headForward(model, taps);
          const restored = tf.image.resizeBilinear(map, [224, 224]);
          return {
            f3: taps.f3.shape.slice(),
            f4: taps.f4.shape.slice(),
            f5: taps.f5.shape.slice(),
            fc2: fc2.shape.slice(),
            fc1: fc1.shape.slice(),
            stacked: stacked.shape.slice(),
            restoredShape: restored.shape.slice(),
            values: restored.dataSync() as Float32Array,
          };
        });
        expect(outcome.f3).toEqual([1, 56, 56, 256]);
        expect(outcome.f4).toEqual([1, 28, 28, 512]);
        expect(outcome.f5).toEqual([1, 14, 14, 512]);
        expect(outcome.fc2).toEqual([1, 56, 56, 576]);
        expect(outcome.fc1).toEqual([1, 28, 28, 576]);
        expect(outcome.stacked).toEqual([1, 56, 56, 3]);
        expect(outcome.restoredShape).toEqual([1, 224, 224, 1]);
        let min = 1;
        let max = 0;
        for (const v of outcome.values) {
          if (v < min) min = v;
          if (v > max) max = v;
        }
        expect(min).toBeGreaterThan(0);
        expect(max).toBeLessThan(1);
      } finally {
        disposeModel(model);
      }
    },
  );
});
