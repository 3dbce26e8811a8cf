/**
 * Command-mode energy provider for the retargeting engine: reads a P6 image,
 * writes the checkpointed network's importance map as a same-size 8-bit P5.
 *
 * Usage: provider.js [--checkpoint FILE] input.ppm output.pgm
 * The checkpoint may also come from $IMPORTANCE_NET_CHECKPOINT.
 * Exits 1 on usage errors, 2 on I/O or checkpoint failures.
 */
import * as fs from "node:fs";

import * as tf from "@tensorflow/tfjs";

import { loadCheckpoint } from "./checkpoint.js";
import { predictMap } from "./model.js";
import { decodePpm, encodePgm, quantizeMap } from "./pnm.js";

export const CHECKPOINT_ENV = "IMPORTANCE_NET_CHECKPOINT";

interface ProviderArgs {
  checkpoint: string;
  input: string;
  output: string;
}

export function parseProviderArgs(argv: string[], env: NodeJS.ProcessEnv): ProviderArgs {
  const positional: string[] = [];
  let checkpoint = env[CHECKPOINT_ENV] ?? "";
  for (let i = 0; i < argv.length; i++) {
    if (argv[i] === "--checkpoint") {
      if (i + 1 >= argv.length) throw new Error("--checkpoint needs a file argument");
      checkpoint = argv[++i];
    } else if (argv[i].startsWith("--")) {
      throw new Error(`unknown flag ${argv[i]}`);
    } else {
      positional.push(argv[i]);
    }
  }
  if (positional.length !== 2) {
    throw new Error("expected exactly two arguments: input.ppm output.pgm");
  }
  if (checkpoint === "") {
    throw new Error(`no checkpoint: pass --checkpoint or set ${CHECKPOINT_ENV}`);
  }
  return { checkpoint, input: positional[0], output: positional[1] };
}

export async function providerMain(argv: string[]): Promise<number> {
  let args: ProviderArgs;
  try {
    args = parseProviderArgs(argv, process.env);
  } catch (err) {
    process.stderr.write(`usage error: ${(err as Error).message}\n`);
    return 1;
  }
  try {
    await tf.setBackend("cpu");
    await tf.ready();
    const model = loadCheckpoint(args.checkpoint);
    const image = decodePpm(args.input);
    const map = predictMap(model, image.width, image.height, image.data);
    fs.writeFileSync(args.output, encodePgm(quantizeMap(map.width, map.height, map.values)));
  } catch (err) {
    process.stderr.write(`provider error: ${(err as Error).message}\n`);
    return 2;
  }
  return 0;
}

const invokedDirectly =
  process.argv[1] !== undefined && /provider\.[cm]?js$/.test(process.argv[1]);
if (invokedDirectly) {
  providerMain(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
