/**
 * Importance-map network: a VGG-16 convolutional backbone tapped at the last
 * conv layer of blocks 3, 4 and 5, a layer-fusion head that merges the taps
 * into a three-channel tensor, and a sigmoid projection producing a
 * unit-interval map at one quarter of the input side.
 *
 * Weights live in an explicit name -> variable store so that checkpointing,
 * freezing and gradient checks can address them directly.
 */
import * as tf from "@tensorflow/tfjs";

import { ShapeMismatch } from "./errors.js";
import { makeNormal, makeRng, type Rng } from "./rng.js";

export interface TapChannels {
  c3: number;
  c4: number;
  c5: number;
}

/** Channel widths of the VGG-16 taps (conv3_3, conv4_3, conv5_3). */
export const VGG_TAPS: TapChannels = { c3: 256, c4: 512, c5: 512 };

/** Filters per fusion conv; each fused pair contributes this many refined channels. */
export const FUSION_WIDTH = 64;

/** Convolution widths of the five VGG-16 blocks (13 conv layers in total). */
const BACKBONE_PLAN: number[][] = [
  [64, 64],
  [128, 128],
  [256, 256, 256],
  [512, 512, 512],
  [512, 512, 512],
];

export interface ModelConfig {
  /** Square network input side; must be a positive multiple of 16. */
  side: number;
  /** Seed for weight initialization. */
  seed: number;
}

export interface FusionModel {
  config: ModelConfig;
  channels: TapChannels;
  /** Logical weight name -> trainable variable. Insertion order is creation order. */
  vars: Map<string, tf.Variable>;
  hasBackbone: boolean;
}

let instanceCounter = 0;

function addConv(
  model: FusionModel,
  normal: Rng,
  name: string,
  kernelSide: number,
  cin: number,
  cout: number,
  prefix: string,
): void {
  const fanIn = kernelSide * kernelSide * cin;
  const std = Math.sqrt(2 / fanIn);
  const values = new Float32Array(fanIn * cout);
  for (let i = 0; i < values.length; i++) values[i] = normal() * std;
  const kernel = tf.tensor4d(values, [kernelSide, kernelSide, cin, cout]);
  model.vars.set(
    `${name}/kernel`,
    tf.variable(kernel, true, `${prefix}/${name}/kernel`),
  );
  kernel.dispose();
  const bias = tf.zeros([cout]);
  model.vars.set(`${name}/bias`, tf.variable(bias, true, `${prefix}/${name}/bias`));
  bias.dispose();
}

function addHeadVars(model: FusionModel, normal: Rng, prefix: string): void {
  const { c3, c4, c5 } = model.channels;
  addConv(model, normal, "head/refine34", 3, c3, FUSION_WIDTH, prefix);
  addConv(model, normal, "head/refine45", 3, c4, FUSION_WIDTH, prefix);
  addConv(model, normal, "head/collapse_c2", 3, FUSION_WIDTH + c4, 1, prefix);
  addConv(model, normal, "head/collapse_c1", 3, FUSION_WIDTH + c5, 1, prefix);
  addConv(model, normal, "head/collapse_deep", 3, c5, 1, prefix);
  addConv(model, normal, "head/project", 1, 3, 1, prefix);
}

export function validateConfig(config: ModelConfig): void {
  if (!Number.isInteger(config.side) || config.side < 16 || config.side % 16 !== 0) {
    throw new ShapeMismatch(`input side must be a positive multiple of 16, got ${config.side}`);
  }
  if (!Number.isInteger(config.seed)) {
    throw new ShapeMismatch(`seed must be an integer, got ${config.seed}`);
  }
}

/** Full network: backbone plus fusion head, randomly initialized from the seed. */
export function createModel(config: ModelConfig): FusionModel {
  validateConfig(config);
  const prefix = `fusion${instanceCounter++}`;
  const model: FusionModel = {
    config: { ...config },
    channels: { ...VGG_TAPS },
    vars: new Map(),
    hasBackbone: true,
  };
  const normal = makeNormal(makeRng(config.seed >>> 0 || 1));
  let cin = 3;
  BACKBONE_PLAN.forEach((widths, blockIndex) => {
    widths.forEach((cout, convIndex) => {
      addConv(model, normal, `block${blockIndex + 1}/conv${convIndex + 1}`, 3, cin, cout, prefix);
      cin = cout;
    });
  });
  addHeadVars(model, normal, prefix);
  return model;
}

/** Head-only model over arbitrary tap widths; used for focused gradient work. */
export function createHead(channels: TapChannels, seed: number): FusionModel {
  const prefix = `fusion${instanceCounter++}`;
  const model: FusionModel = {
    config: { side: 16, seed },
    channels: { ...channels },
    vars: new Map(),
    hasBackbone: false,
  };
  addHeadVars(model, makeNormal(makeRng(seed >>> 0 || 1)), prefix);
  return model;
}

export function disposeModel(model: FusionModel): void {
  for (const v of model.vars.values()) v.dispose();
  model.vars.clear();
}

function weight(model: FusionModel, name: string): tf.Variable {
  const v = model.vars.get(name);
  if (v === undefined) throw new Error(`model has no weight ${name}`);
  return v;
}

function conv(
  model: FusionModel,
  name: string,
  x: tf.Tensor4D,
  activation: "relu" | "linear",
): tf.Tensor4D {
  const kernel = weight(model, `${name}/kernel`) as tf.Tensor4D;
  const bias = weight(model, `${name}/bias`);
  const y = tf.add(tf.conv2d(x, kernel, 1, "same"), bias) as tf.Tensor4D;
  return activation === "relu" ? (tf.relu(y) as tf.Tensor4D) : y;
}

/** Replicate each cell into a factor x factor block (2x2-window upsampling
 * generalized). Built from concat and reshape only, so gradients flow. */
export function upsample(x: tf.Tensor4D, factor: number): tf.Tensor4D {
  const [b, h, w, c] = x.shape;
  if (factor === 1) return tf.tidy(() => x.clone());
  return tf.tidy(() => {
    const copies = Array.from({ length: factor }, () => x);
    const wide = tf.concat(copies, 3).reshape([b, h, w * factor, c]);
    const rows = wide.reshape([b, h, w * factor * c]);
    const tall = tf.concat(
      Array.from({ length: factor }, () => rows),
      2,
    );
    return tall.reshape([b, h * factor, w * factor, c]) as tf.Tensor4D;
  });
}

export type Taps = {
  f3: tf.Tensor4D;
  f4: tf.Tensor4D;
  f5: tf.Tensor4D;
};

/** Run the 13 backbone convolutions, returning the block 3/4/5 tap activations. */
export function backboneForward(model: FusionModel, images: tf.Tensor4D): Taps {
  if (!model.hasBackbone) throw new Error("head-only model has no backbone");
  return tf.tidy(() => {
    let x = images;
    const taps: tf.Tensor4D[] = [];
    BACKBONE_PLAN.forEach((widths, blockIndex) => {
      widths.forEach((_, convIndex) => {
        x = conv(model, `block${blockIndex + 1}/conv${convIndex + 1}`, x, "relu");
      });
      if (blockIndex >= 2) taps.push(x);
      // the block-5 pool is only consumed by the removed classifier layers
      if (blockIndex < 4) x = tf.maxPool(x, 2, 2, "same") as tf.Tensor4D;
    });
    return { f3: taps[0], f4: taps[1], f5: taps[2] };
  });
}

/**
 * Merge a feature map with the next-coarser one: refine the finer map with a
 * 3x3 convolution, upsample the coarser by 2, concatenate along channels.
 */
export function fuse(
  model: FusionModel,
  site: "34" | "45",
  finer: tf.Tensor4D,
  coarser: tf.Tensor4D,
): tf.Tensor4D {
  const [, hf, wf] = finer.shape;
  const [, hc, wc] = coarser.shape;
  if (hc * 2 !== hf || wc * 2 !== wf) {
    throw new ShapeMismatch(
      `fuse needs the coarser map at exactly half resolution, got ${hf}x${wf} with ${hc}x${wc}`,
    );
  }
  return tf.tidy(() => {
    const refined = conv(model, `head/refine${site}`, finer, "relu");
    return tf.concat([refined, upsample(coarser, 2)], 3) as tf.Tensor4D;
  });
}

/**
 * Collapse each fusion product and the deepest tap to one channel, bring all
 * three to the finest product's resolution, and stack them.
 */
export function fusionTensor(
  model: FusionModel,
  fc2: tf.Tensor4D,
  fc1: tf.Tensor4D,
  f5: tf.Tensor4D,
): tf.Tensor4D {
  const [, h2, w2] = fc2.shape;
  const [, h1, w1] = fc1.shape;
  const [, h5, w5] = f5.shape;
  if (h1 * 2 !== h2 || w1 * 2 !== w2 || h5 * 4 !== h2 || w5 * 4 !== w2) {
    throw new ShapeMismatch(
      `fusion tensor needs resolutions in a 4:2:1 ladder, got ${h2}x${w2}, ${h1}x${w1}, ${h5}x${w5}`,
    );
  }
  return tf.tidy(() => {
    const fine = conv(model, "head/collapse_c2", fc2, "linear");
    const mid = upsample(conv(model, "head/collapse_c1", fc1, "linear"), 2);
    const deep = upsample(conv(model, "head/collapse_deep", f5, "linear"), 4);
    return tf.concat([fine, mid, deep], 3) as tf.Tensor4D;
  });
}

/** Fusion head: taps in, sigmoid map out at the finest tap's resolution. */
export function headForward(model: FusionModel, taps: Taps): tf.Tensor4D {
  return tf.tidy(() => {
    const fc2 = fuse(model, "34", taps.f3, taps.f4);
    const fc1 = fuse(model, "45", taps.f4, taps.f5);
    const stacked = fusionTensor(model, fc2, fc1, taps.f5);
    return tf.sigmoid(conv(model, "head/project", stacked, "linear")) as tf.Tensor4D;
  });
}

/** Whole network on a normalized [b, side, side, 3] batch. */
export function modelForward(model: FusionModel, images: tf.Tensor4D): tf.Tensor4D {
  return tf.tidy(() => {
    const taps = backboneForward(model, images);
    return headForward(model, taps);
  });
}

export interface FloatMap {
  width: number;
  height: number;
  values: Float32Array;
}

/**
 * Importance map for one raw RGB image of arbitrary size: resample to the
 * configured square input, run the network, resample the map back to the
 * original dimensions. All values are strictly inside (0, 1).
 */
export function predictMap(
  model: FusionModel,
  width: number,
  height: number,
  rgb: Uint8Array,
): FloatMap {
  if (rgb.length !== width * height * 3) {
    throw new ShapeMismatch(`pixel buffer length ${rgb.length} does not match ${width}x${height}x3`);
  }
  const side = model.config.side;
  const values = tf.tidy(() => {
    const scaled = new Float32Array(rgb.length);
    for (let i = 0; i < rgb.length; i++) scaled[i] = rgb[i] / 255;
    const image = tf.tensor3d(scaled, [height, width, 3]);
    const resized = tf.image.resizeBilinear(image, [side, side]);
    const map = modelForward(model, resized.expandDims(0) as tf.Tensor4D);
    const restored = tf.image.resizeBilinear(map, [height, width]);
    return restored.dataSync() as Float32Array;
  });
  return { width, height, values };
}

export function headVariables(model: FusionModel): tf.Variable[] {
  const out: tf.Variable[] = [];
  for (const [name, v] of model.vars) if (name.startsWith("head/")) out.push(v);
  return out;
}

export function allVariables(model: FusionModel): tf.Variable[] {
  return [...model.vars.values()];
}
