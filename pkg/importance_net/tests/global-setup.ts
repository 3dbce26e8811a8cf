/** Compile the package before the suites run: the provider tests spawn the
 * built dist/provider.js through exported wrapper scripts. */
import { spawnSync } from "node:child_process";
import * as fs from "node:fs";
import * as path from "node:path";
import { fileURLToPath } from "node:url";

export default function setup(): void {
  const root = path.dirname(path.dirname(fileURLToPath(import.meta.url)));
  const candidates = [
    path.join(root, "node_modules", "typescript", "bin", "tsc"),
    "/usr/lib/node_modules/typescript/bin/tsc",
  ];
  const tsc = candidates.find((candidate) => fs.existsSync(candidate));
  if (tsc === undefined) throw new Error("no TypeScript compiler found");
  const result = spawnSync(process.execPath, [tsc, "-p", root], { cwd: root, stdio: "inherit" });
  if (result.status !== 0) throw new Error(`package build failed with status ${result.status}`);
}
