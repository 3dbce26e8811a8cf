import { spawnSync } from "node:child_process";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import * as tf from "@tensorflow/tfjs";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { saveCheckpoint } from "../src/checkpoint.js";
import { exportProvider } from "../src/export.js";
import { createModel, disposeModel, predictMap, type FloatMap } from "../src/model.js";
import { decodePgm } from "../src/pnm.js";
import { makeRng } from "../src/rng.js";
import { synthPair, writePpm } from "./synth.js";

let root: string;
let checkpointPath: string;
let toolPath: string;
let imagePath: string;
let imageWidth: number;
let imageHeight: number;
let directMap: FloatMap;

beforeAll(async () => {
  await tf.setBackend("cpu");
  await tf.ready();
  root = fs.mkdtempSync(path.join(os.tmpdir(), "provider-test-"));
  checkpointPath = path.join(root, "model.ckpt.json");
  toolPath = path.join(root, "importance-tool");
  imagePath = path.join(root, "input.ppm");

  const model = createModel({ side: 32, seed: 21 });
  saveCheckpoint(model, checkpointPath);

  imageWidth = 24;
  imageHeight = 18;
  const { image } = synthPair(makeRng(99), imageWidth, imageHeight);
  writePpm(imagePath, image);
  directMap = predictMap(model, imageWidth, imageHeight, image.data);
  disposeModel(model);

  exportProvider(checkpointPath, toolPath);
}, 300_000);

afterAll(() => {
  fs.rmSync(root, { recursive: true, force: true });
});

describe("exported provider command", () => {
  it("is an executable wrapper", () => {
    const stat = fs.statSync(toolPath);
    expect(stat.mode & 0o111).not.toBe(0);
    expect(fs.readFileSync(toolPath, "utf8").startsWith("#!/bin/sh")).toBe(true);
  });

  it("writes a same-size map within one quantization level of the float forward", { timeout: 300_000 }, () => {
    const outPath = path.join(root, "direct-out.pgm");
    const run = spawnSync(toolPath, [imagePath, outPath], { encoding: "utf8" });
    expect(run.status).toBe(0);
    const map = decodePgm(outPath);
    expect(map.width).toBe(imageWidth);
    expect(map.height).toBe(imageHeight);
    for (let i = 0; i < map.data.length; i++) {
      expect(Math.abs(map.data[i] / 255 - directMap.values[i])).toBeLessThanOrEqual(1 / 255);
    }
  });

  it("passes the engine's command-mode energy round trip", { timeout: 300_000 }, () => {
    const mapPath = path.join(root, "engine-map.pgm");
    const run = spawnSync(
      "retarget",
      ["energy", "--in", imagePath, "--out", mapPath, "--energy", `cmd:${toolPath}`],
      { encoding: "utf8" },
    );
    expect(run.status).toBe(0);
    const map = decodePgm(mapPath);
    expect(map.width).toBe(imageWidth);
    expect(map.height).toBe(imageHeight);
    for (let i = 0; i < map.data.length; i++) {
      expect(Math.abs(map.data[i] / 255 - directMap.values[i])).toBeLessThanOrEqual(1 / 255);
    }
  });

  it("drives a full retarget pass as the engine's importance source", { timeout: 300_000 }, () => {
    const outPath = path.join(root, "narrow.ppm");
    const run = spawnSync(
      "retarget",
      [
        "retarget",
        "--in", imagePath,
        "--out", outPath,
        "--width", String(imageWidth - 2),
        "--energy", `cmd:${toolPath}`,
        "--refresh", "carry",
      ],
      { encoding: "utf8" },
    );
    expect(run.status).toBe(0);
    const header = fs.readFileSync(outPath).toString("latin1", 0, 32);
    expect(header.startsWith("P6")).toBe(true);
    expect(header).toContain(`${imageWidth - 2} ${imageHeight}`);
  });

  it("exits nonzero on a corrupt checkpoint", () => {
    const badCkpt = path.join(root, "corrupt.ckpt.json");
    fs.writeFileSync(badCkpt, "not json at all {");
    const badTool = path.join(root, "bad-tool");
    exportProvider(badCkpt, badTool);
    const outPath = path.join(root, "never.pgm");
    const run = spawnSync(badTool, [imagePath, outPath], { encoding: "utf8" });
    expect(run.status).toBe(2);
    expect(run.stderr).toContain("checkpoint");
    expect(fs.existsSync(outPath)).toBe(false);
  });

  it("exits nonzero when the input image is unreadable", () => {
    const outPath = path.join(root, "missing-in.pgm");
    const run = spawnSync(toolPath, [path.join(root, "missing.ppm"), outPath], { encoding: "utf8" });
    expect(run.status).toBe(2);
  });

  it("rejects malformed invocations", () => {
    const run = spawnSync(toolPath, ["only-one-arg"], { encoding: "utf8" });
    expect(run.status).toBe(1);
    expect(run.stderr).toContain("usage");
  });

  it("refuses to wrap a missing checkpoint", () => {
    expect(() => exportProvider(path.join(root, "nope.ckpt.json"), path.join(root, "t"))).toThrow(
      /does not exist/,
    );
  });
});
