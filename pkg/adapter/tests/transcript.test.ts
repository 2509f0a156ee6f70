/**
 * Conformance: replay the published golden transcript against the built
 * adapter binary over real pipes, mirroring how the harness drives it.
 */
import { spawn, type ChildProcessWithoutNullStreams } from "node:child_process";
import { readFileSync } from "node:fs";
import * as path from "node:path";
import * as readline from "node:readline";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

const here = path.dirname(fileURLToPath(import.meta.url));
const MAIN = path.resolve(here, "..", "dist", "main.js");
const TRANSCRIPT = path.resolve(
  here,
  "..",
  "..",
  "src",
  "trajbench",
  "data",
  "golden_transcript.json",
);

interface Step {
  send?: Record<string, unknown>;
  send_raw?: string;
  expect?: Record<string, unknown>;
  expect_exit?: boolean;
}

function subsetMatches(expected: unknown, actual: unknown): boolean {
  if (Array.isArray(expected)) {
    return (
      Array.isArray(actual) &&
      expected.length === actual.length &&
      expected.every((e, i) => subsetMatches(e, actual[i]))
    );
  }
  if (expected !== null && typeof expected === "object") {
    if (actual === null || typeof actual !== "object") return false;
    return Object.entries(expected).every(
      ([k, v]) => k in (actual as object) && subsetMatches(v, (actual as Record<string, unknown>)[k]),
    );
  }
  if (typeof expected === "number" && typeof actual === "number") {
    return expected === actual;
  }
  return expected === actual;
}

class Replayer {
  private lines: string[] = [];
  private waiters: Array<(line: string | null) => void> = [];
  private exitCode: Promise<number | null>;

  constructor(private proc: ChildProcessWithoutNullStreams) {
    const rl = readline.createInterface({ input: proc.stdout });
    rl.on("line", (line) => {
      const waiter = this.waiters.shift();
      if (waiter) waiter(line);
      else this.lines.push(line);
    });
    this.exitCode = new Promise((resolve) => proc.on("exit", (code) => resolve(code)));
  }

  send(text: string): void {
    this.proc.stdin.write(text + "\n");
  }

  async nextReply(timeoutMs = 5000): Promise<Record<string, unknown>> {
    for (;;) {
      const line = await this.nextLine(timeoutMs);
      if (line === null) throw new Error("adapter produced no reply");
      const msg = JSON.parse(line) as Record<string, unknown>;
      if (msg.type === "train_progress") continue; // notification, not a reply
      return msg;
    }
  }

  private nextLine(timeoutMs: number): Promise<string | null> {
    const queued = this.lines.shift();
    if (queued !== undefined) return Promise.resolve(queued);
    return new Promise((resolve) => {
      const timer = setTimeout(() => resolve(null), timeoutMs);
      this.waiters.push((line) => {
        clearTimeout(timer);
        resolve(line);
      });
    });
  }

  async waitExit(timeoutMs = 5000): Promise<number | null> {
    return Promise.race([
      this.exitCode,
      new Promise<null>((resolve) => setTimeout(() => resolve(null), timeoutMs)),
    ]);
  }

  kill(): void {
    if (this.proc.exitCode === null) this.proc.kill();
  }
}

describe("golden transcript", () => {
  let replayer: Replayer;

  beforeAll(() => {
    replayer = new Replayer(spawn("node", [MAIN], { stdio: ["pipe", "pipe", "pipe"] }));
  });

  afterAll(() => {
    replayer.kill();
  });

  it("replays every step faithfully", async () => {
    const transcript = JSON.parse(readFileSync(TRANSCRIPT, "utf8")) as { steps: Step[] };
    expect(transcript.steps.length).toBeGreaterThan(0);
    for (const [k, step] of transcript.steps.entries()) {
      if (step.send_raw !== undefined) {
        replayer.send(step.send_raw);
      } else if (step.send !== undefined) {
        replayer.send(JSON.stringify(step.send));
      }
      if (step.expect_exit) {
        const code = await replayer.waitExit();
        expect(code, `step ${k}: adapter should exit cleanly`).toBe(0);
        continue;
      }
      if (step.expect === undefined) continue;
      const reply = await replayer.nextReply();
      expect(
        subsetMatches(step.expect, reply),
        `step ${k}: ${JSON.stringify(reply)} should match ${JSON.stringify(step.expect)}`,
      ).toBe(true);
    }
  }, 20000);
});
