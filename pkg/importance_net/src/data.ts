/**
 * Desk-scale dataset loading: a flat directory of `<name>.ppm` color images,
 * each paired with a `<name>.pgm` binary mask (object white, background black).
 */
import * as fs from "node:fs";
import * as path from "node:path";

import * as tf from "@tensorflow/tfjs";

import { DatasetError } from "./errors.js";
import { decodePgm, decodePpm, type Pgm, type Ppm } from "./pnm.js";

export interface Sample {
  name: string;
  image: Ppm;
  mask: Pgm;
}

export function loadDataset(root: string): Sample[] {
  let entries: string[];
  try {
    entries = fs.readdirSync(root);
  } catch (err) {
    throw new DatasetError(`cannot list dataset root ${root}: ${(err as Error).message}`);
  }
  const images = entries.filter((e) => e.endsWith(".ppm")).sort();
  const masks = new Set(entries.filter((e) => e.endsWith(".pgm")));
  if (images.length === 0) throw new DatasetError(`no .ppm images under ${root}`);

  const samples: Sample[] = [];
  for (const entry of images) {
    const name = entry.slice(0, -4);
    const maskEntry = `${name}.pgm`;
    if (!masks.delete(maskEntry)) {
      throw new DatasetError(`image ${entry} has no mask ${maskEntry}`);
    }
    const image = decodePpm(path.join(root, entry));
    const mask = decodePgm(path.join(root, maskEntry));
    if (mask.width !== image.width || mask.height !== image.height) {
      throw new DatasetError(
        `mask ${maskEntry} is ${mask.width}x${mask.height}, image is ${image.width}x${image.height}`,
      );
    }
    for (let i = 0; i < mask.data.length; i++) {
      if (mask.data[i] !== 0 && mask.data[i] !== 255) {
        throw new DatasetError(`mask ${maskEntry} is not binary (found sample ${mask.data[i]})`);
      }
    }
    samples.push({ name, image, mask });
  }
  if (masks.size > 0) {
    const stray = [...masks].sort()[0];
    throw new DatasetError(`mask ${stray} has no matching image`);
  }
  return samples;
}

export interface SampleTensors {
  /** [n, side, side, 3] images scaled to [0, 1]. */
  images: tf.Tensor4D;
  /** [n, side/4, side/4, 1] masks in {0, 1}, sized to match the network output. */
  masks: tf.Tensor4D;
}

/**
 * Resample a dataset to the square training side: images bilinearly, masks by
 * nearest neighbor so they stay binary, at the resolution the head emits.
 */
export function toTensors(samples: Sample[], side: number): SampleTensors {
  return tf.tidy(() => {
    const images: tf.Tensor3D[] = [];
    const masks: tf.Tensor3D[] = [];
    for (const sample of samples) {
      const { width, height } = sample.image;
      const scaled = new Float32Array(sample.image.data.length);
      for (let i = 0; i < scaled.length; i++) scaled[i] = sample.image.data[i] / 255;
      images.push(tf.image.resizeBilinear(tf.tensor3d(scaled, [height, width, 3]), [side, side]));

      const binary = new Float32Array(sample.mask.data.length);
      for (let i = 0; i < binary.length; i++) binary[i] = sample.mask.data[i] === 255 ? 1 : 0;
      masks.push(
        tf.image.resizeNearestNeighbor(tf.tensor3d(binary, [height, width, 1]), [
          side / 4,
          side / 4,
        ]),
      );
    }
    return { images: tf.stack(images) as tf.Tensor4D, masks: tf.stack(masks) as tf.Tensor4D };
  });
}
