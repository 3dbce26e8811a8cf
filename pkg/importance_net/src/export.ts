/** Turn a checkpoint into a standalone provider command the engine can call:
 * a small executable wrapper that runs the compiled provider entry with the
 * checkpoint baked in, forwarding the engine's input/output path arguments. */
import * as fs from "node:fs";
import * as path from "node:path";
import { fileURLToPath } from "node:url";

import { CheckpointError } from "./errors.js";

function shellQuote(text: string): string {
  return `'${text.replace(/'/g, `'\\''`)}'`;
}

/** Absolute path of the compiled provider entry point. */
export function providerEntry(): string {
  const here = path.dirname(fileURLToPath(import.meta.url));
  return path.join(path.dirname(here), "dist", "provider.js");
}

export function exportProvider(checkpointPath: string, toolPath: string): void {
  if (!fs.existsSync(checkpointPath)) {
    throw new CheckpointError(`checkpoint ${checkpointPath} does not exist`);
  }
  const entry = providerEntry();
  if (!fs.existsSync(entry)) {
    throw new Error(`provider entry ${entry} is not built; run the package build first`);
  }
  const script = [
    "#!/bin/sh",
    `exec ${shellQuote(process.execPath)} ${shellQuote(entry)} --checkpoint ${shellQuote(
      path.resolve(checkpointPath),
    )} "$@"`,
    "",
  ].join("\n");
  fs.writeFileSync(toolPath, script, { mode: 0o755 });
}
