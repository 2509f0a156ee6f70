#!/usr/bin/env node
import * as readline from "node:readline";

import { loadModel } from "./meanPredictor.js";
import type { Message } from "./protocol.js";
import { AdapterServer } from "./server.js";

function emit(msg: Message): void {
  process.stdout.write(JSON.stringify(msg) + "\n");
}

async function main(): Promise<void> {
  const model = await loadModel();
  const server = new AdapterServer(model, emit, () => process.exit(0));
  const rl = readline.createInterface({ input: process.stdin, terminal: false });
  rl.on("line", (line) => server.handleLine(line));
  rl.on("close", () => process.exit(0)); // harness closed our stdin
}

main().catch((err) => {
  console.error(`adapter fatal: ${String(err)}`);
  process.exit(1);
});
