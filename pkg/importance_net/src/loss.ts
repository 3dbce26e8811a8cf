/** Binary cross-entropy, in two forms: a float64 contract function used for
 * evaluation and verification, and a graph form used inside training. Both
 * clamp predictions to [1e-7, 1 - 1e-7] before taking logarithms. */
import * as tf from "@tensorflow/tfjs";

import { ShapeMismatch } from "./errors.js";

export const PREDICTION_CLAMP = 1e-7;

/** Mean over pixels of -[y*log(p) + (1-y)*log(1-p)], computed in float64. */
export function bceLoss(truth: ArrayLike<number>, predicted: ArrayLike<number>): number {
  if (truth.length !== predicted.length) {
    throw new ShapeMismatch(`mask has ${truth.length} values, prediction has ${predicted.length}`);
  }
  if (truth.length === 0) throw new ShapeMismatch("empty mask");
  let total = 0;
  for (let i = 0; i < truth.length; i++) {
    const y = truth[i];
    let p = predicted[i];
    if (p < PREDICTION_CLAMP) p = PREDICTION_CLAMP;
    if (p > 1 - PREDICTION_CLAMP) p = 1 - PREDICTION_CLAMP;
    total -= y * Math.log(p) + (1 - y) * Math.log(1 - p);
  }
  return total / truth.length;
}

/** Same formula as a differentiable scalar on tensors of identical shape. */
export function bceLossGraph(truth: tf.Tensor, predicted: tf.Tensor): tf.Scalar {
  if (truth.shape.length !== predicted.shape.length ||
      truth.shape.some((dim, i) => dim !== predicted.shape[i])) {
    throw new ShapeMismatch(
      `mask shape [${truth.shape}] does not match prediction shape [${predicted.shape}]`,
    );
  }
  return tf.tidy(() => {
    const p = tf.clipByValue(predicted, PREDICTION_CLAMP, 1 - PREDICTION_CLAMP);
    const perPixel = tf.add(
      tf.mul(truth, tf.log(p)),
      tf.mul(tf.sub(1, truth), tf.log(tf.sub(1, p))),
    );
    return tf.neg(tf.mean(perPixel)) as tf.Scalar;
  });
}
