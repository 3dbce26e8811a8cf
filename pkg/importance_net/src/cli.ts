/**
 * Command line for the importance network.
 *
 *   cli.js train --data DIR --out CHECKPOINT [--side N] [--batch N] [--lr F]
 *                [--momentum F] [--epochs N] [--seed N] [--fine-tune]
 *   cli.js map --checkpoint CHECKPOINT input.ppm output.pgm
 *   cli.js export --checkpoint CHECKPOINT --out TOOL
 */
import * as tf from "@tensorflow/tfjs";

import { exportProvider } from "./export.js";
import { providerMain } from "./provider.js";
import { train, type TrainConfig } from "./train.js";

function takeFlag(args: string[], flag: string): string | undefined {
  const at = args.indexOf(flag);
  if (at === -1) return undefined;
  if (at + 1 >= args.length) throw new Error(`${flag} needs a value`);
  const value = args[at + 1];
  args.splice(at, 2);
  return value;
}

function takeSwitch(args: string[], flag: string): boolean {
  const at = args.indexOf(flag);
  if (at === -1) return false;
  args.splice(at, 1);
  return true;
}

function numberFlag(args: string[], flag: string, fallback: number): number {
  const raw = takeFlag(args, flag);
  if (raw === undefined) return fallback;
  const value = Number(raw);
  if (!Number.isFinite(value)) throw new Error(`${flag} needs a number, got ${raw}`);
  return value;
}

async function trainCommand(args: string[]): Promise<number> {
  const data = takeFlag(args, "--data");
  const out = takeFlag(args, "--out");
  if (data === undefined || out === undefined) {
    throw new Error("train needs --data DIR and --out CHECKPOINT");
  }
  const cfg: TrainConfig = {
    datasetRoot: data,
    side: numberFlag(args, "--side", 224),
    batchSize: numberFlag(args, "--batch", 8),
    learningRate: numberFlag(args, "--lr", 1e-2),
    momentum: numberFlag(args, "--momentum", 0.9),
    epochs: numberFlag(args, "--epochs", 2),
    seed: numberFlag(args, "--seed", 1),
    fineTuneBackbone: takeSwitch(args, "--fine-tune"),
    checkpointPath: out,
  };
  if (args.length > 0) throw new Error(`unrecognized arguments: ${args.join(" ")}`);
  await tf.setBackend("cpu");
  await tf.ready();
  const result = await train(cfg);
  console.log(
    `trained ${result.steps} steps: loss ${result.initialLoss.toFixed(6)} -> ${result.finalLoss.toFixed(6)}`,
  );
  console.log(`checkpoint written to ${out}`);
  return 0;
}

function exportCommand(args: string[]): number {
  const checkpoint = takeFlag(args, "--checkpoint");
  const out = takeFlag(args, "--out");
  if (checkpoint === undefined || out === undefined) {
    throw new Error("export needs --checkpoint CHECKPOINT and --out TOOL");
  }
  if (args.length > 0) throw new Error(`unrecognized arguments: ${args.join(" ")}`);
  exportProvider(checkpoint, out);
  console.log(`provider command written to ${out}`);
  return 0;
}

export async function main(argv: string[]): Promise<number> {
  const [command, ...rest] = argv;
  try {
    switch (command) {
      case "train":
        return await trainCommand(rest);
      case "map":
        return await providerMain(rest);
      case "export":
        return exportCommand(rest);
      default:
        process.stderr.write("usage: cli.js {train|map|export} ...\n");
        return 1;
    }
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 1;
  }
}

const invokedDirectly = process.argv[1] !== undefined && /cli\.[cm]?js$/.test(process.argv[1]);
if (invokedDirectly) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
