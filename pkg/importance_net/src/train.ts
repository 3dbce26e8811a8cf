/**
 * Desk-scale training: SGD with momentum on binary cross-entropy between the
 * network's sigmoid map and a binary object mask. The backbone stays frozen
 * unless fine-tuning is requested; frozen runs cache tap activations per
 * image so only the fusion head is ever re-executed.
 */
import * as tf from "@tensorflow/tfjs";

import { saveSnapshot, snapshotWeights, type WeightSnapshot } from "./checkpoint.js";
import { loadDataset, toTensors } from "./data.js";
import { DatasetError } from "./errors.js";
import { bceLossGraph } from "./loss.js";
import {
  allVariables,
  backboneForward,
  createModel,
  disposeModel,
  headForward,
  headVariables,
  modelForward,
  validateConfig,
  type FusionModel,
  type Taps,
} from "./model.js";
import { makeRng, shuffled } from "./rng.js";

export interface TrainConfig {
  datasetRoot: string;
  /** Square network input side, a positive multiple of 16. */
  side: number;
  batchSize: number;
  learningRate: number;
  momentum: number;
  epochs: number;
  seed: number;
  /** When false (the default policy) only the fusion head trains. */
  fineTuneBackbone: boolean;
  checkpointPath: string;
}

export interface TrainResult {
  model: FusionModel;
  /** Mean loss over the whole dataset before any step. */
  initialLoss: number;
  /** Mean loss over the whole dataset after the last epoch. */
  finalLoss: number;
  /** Mean training loss per epoch, in order. */
  epochLosses: number[];
  steps: number;
}

function validateTrainConfig(cfg: TrainConfig): void {
  validateConfig({ side: cfg.side, seed: cfg.seed });
  if (!Number.isInteger(cfg.batchSize) || cfg.batchSize < 1) {
    throw new DatasetError(`batch size must be a positive integer, got ${cfg.batchSize}`);
  }
  if (!Number.isInteger(cfg.epochs) || cfg.epochs < 0) {
    throw new DatasetError(`epochs must be a non-negative integer, got ${cfg.epochs}`);
  }
  if (!(cfg.learningRate > 0) || !(cfg.momentum >= 0)) {
    throw new DatasetError("learning rate must be positive and momentum non-negative");
  }
}

/** Mean dataset loss from cached taps (frozen path) or full forwards. */
function datasetLoss(
  model: FusionModel,
  cachedTaps: Taps[] | null,
  images: tf.Tensor4D,
  masks: tf.Tensor4D,
): number {
  return tf.tidy(() => {
    let predicted: tf.Tensor4D;
    if (cachedTaps !== null) {
      const maps = cachedTaps.map((taps) => headForward(model, taps));
      predicted = tf.concat(maps, 0) as tf.Tensor4D;
    } else {
      predicted = modelForward(model, images);
    }
    return bceLossGraph(masks, predicted).dataSync()[0];
  });
}

export async function train(cfg: TrainConfig): Promise<TrainResult> {
  validateTrainConfig(cfg);
  const samples = loadDataset(cfg.datasetRoot);
  const model = createModel({ side: cfg.side, seed: cfg.seed });
  const { images, masks } = toTensors(samples, cfg.side);

  const frozen = !cfg.fineTuneBackbone;
  const cachedTaps: Taps[] | null = frozen
    ? samples.map((_, i) =>
        tf.tidy(() => {
          const one = tf.slice(images, [i, 0, 0, 0], [1, -1, -1, -1]) as tf.Tensor4D;
          return backboneForward(model, one);
        }),
      )
    : null;
  const trainable = frozen ? headVariables(model) : allVariables(model);

  const initialLoss = datasetLoss(model, cachedTaps, images, masks);
  let best: WeightSnapshot = snapshotWeights(model);
  let bestLoss = Number.POSITIVE_INFINITY;

  const optimizer = tf.train.momentum(cfg.learningRate, cfg.momentum);
  const order = samples.map((_, i) => i);
  const epochLosses: number[] = [];
  let steps = 0;

  for (let epoch = 0; epoch < cfg.epochs; epoch++) {
    const shuffledOrder = shuffled(order, makeRng((cfg.seed ^ (epoch + 1)) >>> 0));
    let epochTotal = 0;
    let counted = 0;
    for (let start = 0; start < shuffledOrder.length; start += cfg.batchSize) {
      const batch = shuffledOrder.slice(start, start + cfg.batchSize);
      const stepLoss = tf.tidy(() => {
        const batchMasks = tf.concat(
          batch.map((i) => tf.slice(masks, [i, 0, 0, 0], [1, -1, -1, -1])),
          0,
        );
        const lossValue = optimizer.minimize(
          () => {
            let predicted: tf.Tensor4D;
            if (cachedTaps !== null) {
              const maps = batch.map((i) => headForward(model, cachedTaps[i]));
              predicted = tf.concat(maps, 0) as tf.Tensor4D;
            } else {
              const batchImages = tf.concat(
                batch.map((i) => tf.slice(images, [i, 0, 0, 0], [1, -1, -1, -1])),
                0,
              ) as tf.Tensor4D;
              predicted = modelForward(model, batchImages);
            }
            return bceLossGraph(batchMasks, predicted);
          },
          true,
          trainable,
        );
        return lossValue === null ? 0 : lossValue.dataSync()[0];
      });
      steps += 1;
      epochTotal += stepLoss * batch.length;
      counted += batch.length;
    }
    const epochLoss = epochTotal / counted;
    epochLosses.push(epochLoss);
    console.log(`epoch ${epoch + 1}/${cfg.epochs}: mean loss ${epochLoss.toFixed(6)}`);
    if (epochLoss < bestLoss) {
      bestLoss = epochLoss;
      best = snapshotWeights(model);
    }
    // let queued microtasks (and any backend flushes) run between epochs
    await tf.nextFrame();
  }

  const finalLoss = datasetLoss(model, cachedTaps, images, masks);
  saveSnapshot(model.config, best, cfg.checkpointPath);

  images.dispose();
  masks.dispose();
  if (cachedTaps !== null) {
    for (const taps of cachedTaps) {
      taps.f3.dispose();
      taps.f4.dispose();
      taps.f5.dispose();
    }
  }
  optimizer.dispose();
  return { model, initialLoss, finalLoss, epochLosses, steps };
}

export { disposeModel };
