/** Single-file JSON checkpoints: model configuration plus every named weight
 * as base64 float32 bytes. Loading reconstructs the model and overwrites its
 * initialization, so a round trip is bit-exact. */
import * as fs from "node:fs";

import * as tf from "@tensorflow/tfjs";

import { CheckpointError } from "./errors.js";
import { createModel, type FusionModel, type ModelConfig } from "./model.js";

const FORMAT = "importance-net-checkpoint";
const VERSION = 1;

interface StoredWeight {
  name: string;
  shape: number[];
  data: string;
}

interface CheckpointFile {
  format: string;
  version: number;
  side: number;
  seed: number;
  weights: StoredWeight[];
}

export type WeightSnapshot = Map<string, { shape: number[]; values: Float32Array }>;

/** Copy every weight out of the model; the copies are detached from training. */
export function snapshotWeights(model: FusionModel): WeightSnapshot {
  const snapshot: WeightSnapshot = new Map();
  for (const [name, variable] of model.vars) {
    snapshot.set(name, {
      shape: variable.shape.slice(),
      values: new Float32Array(variable.dataSync() as Float32Array),
    });
  }
  return snapshot;
}

export function saveSnapshot(config: ModelConfig, snapshot: WeightSnapshot, outPath: string): void {
  const weights: StoredWeight[] = [];
  for (const [name, { shape, values }] of snapshot) {
    const bytes = Buffer.from(values.buffer, values.byteOffset, values.byteLength);
    weights.push({ name, shape, data: bytes.toString("base64") });
  }
  const file: CheckpointFile = {
    format: FORMAT,
    version: VERSION,
    side: config.side,
    seed: config.seed,
    weights,
  };
  fs.writeFileSync(outPath, JSON.stringify(file));
}

export function saveCheckpoint(model: FusionModel, outPath: string): void {
  if (!model.hasBackbone) throw new CheckpointError("only full models are checkpointed");
  saveSnapshot(model.config, snapshotWeights(model), outPath);
}

export function loadCheckpoint(ckptPath: string): FusionModel {
  let raw: string;
  try {
    raw = fs.readFileSync(ckptPath, "utf8");
  } catch (err) {
    throw new CheckpointError(`cannot read checkpoint ${ckptPath}: ${(err as Error).message}`);
  }
  let file: CheckpointFile;
  try {
    file = JSON.parse(raw) as CheckpointFile;
  } catch {
    throw new CheckpointError(`checkpoint ${ckptPath} is not valid JSON`);
  }
  if (file === null || typeof file !== "object" || file.format !== FORMAT) {
    throw new CheckpointError(`checkpoint ${ckptPath} has no recognizable format marker`);
  }
  if (file.version !== VERSION) {
    throw new CheckpointError(`checkpoint version ${file.version} is not supported`);
  }
  if (!Number.isInteger(file.side) || !Array.isArray(file.weights)) {
    throw new CheckpointError(`checkpoint ${ckptPath} is missing fields`);
  }

  let model: FusionModel;
  try {
    model = createModel({ side: file.side, seed: Number(file.seed) || 0 });
  } catch (err) {
    throw new CheckpointError(`checkpoint configuration is invalid: ${(err as Error).message}`);
  }
  try {
    const pending = new Set(model.vars.keys());
    for (const stored of file.weights) {
      const variable = model.vars.get(stored.name);
      if (variable === undefined) {
        throw new CheckpointError(`checkpoint has unknown weight ${stored.name}`);
      }
      const expected = variable.shape;
      if (
        stored.shape.length !== expected.length ||
        stored.shape.some((dim, i) => dim !== expected[i])
      ) {
        throw new CheckpointError(
          `weight ${stored.name} has shape [${stored.shape}], expected [${expected}]`,
        );
      }
      if (typeof stored.data !== "string") {
        throw new CheckpointError(`weight ${stored.name} has no data`);
      }
      const bytes = Buffer.from(stored.data, "base64");
      const count = expected.reduce((a, b) => a * b, 1);
      if (bytes.byteLength !== count * 4) {
        throw new CheckpointError(
          `weight ${stored.name} has ${bytes.byteLength} bytes, expected ${count * 4}`,
        );
      }
      // copy: a pooled Buffer's byteOffset need not be float-aligned
      const aligned = new Uint8Array(count * 4);
      aligned.set(bytes);
      const values = new Float32Array(aligned.buffer);
      const tensor = tf.tensor(values, expected, "float32");
      variable.assign(tensor);
      tensor.dispose();
      pending.delete(stored.name);
    }
    if (pending.size > 0) {
      throw new CheckpointError(`checkpoint is missing weight ${[...pending].sort()[0]}`);
    }
  } catch (err) {
    for (const v of model.vars.values()) v.dispose();
    throw err;
  }
  return model;
}
