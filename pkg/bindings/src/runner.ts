/** Subprocess plumbing: invoke the auditor CLI and map its failures. */

import { execFile } from "node:child_process";
import { mkdtemp, rm } from "node:fs/promises";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { HullAuditError } from "./types.js";
import type { AuditOptions } from "./types.js";

export interface RunResult {
  stdout: string;
  stderr: string;
}

/**
 * Run `python -m hullaudit.cli <args>`.
 *
 * Every call is its own OS process, so the host event loop and other
 * threads keep running during solves, and concurrent calls are safe: the
 * auditor core is stateless between invocations.
 */
export function runCli(args: string[], options: AuditOptions): Promise<RunResult> {
  const python = options.pythonPath ?? process.env.HULLAUDIT_PYTHON ?? "python3";
  return new Promise((resolve, reject) => {
    execFile(
      python,
      ["-m", "hullaudit.cli", ...args],
      { maxBuffer: 512 * 1024 * 1024, timeout: options.timeoutMs ?? 0 },
      (error, stdout, stderr) => {
        if (!error) {
          resolve({ stdout, stderr });
          return;
        }
        const code = typeof (error as NodeJS.ErrnoException).code === "number"
          ? ((error as NodeJS.ErrnoException).code as unknown as number)
          : (error as unknown as { code?: number }).code ?? 1;
        reject(mapFailure(stderr, stdout, Number(code) || 1, error));
      },
    );
  });
}

function mapFailure(stderr: string, stdout: string, exitCode: number, cause: Error): Error {
  // the CLI prints one machine-readable JSON object per failure on stderr
  const lines = stderr.trim().split(/\r?\n/).reverse();
  for (const line of lines) {
    if (!line.startsWith("{")) continue;
    try {
      const parsed = JSON.parse(line);
      if (parsed && typeof parsed.error === "string") {
        return new HullAuditError(parsed.error, parsed.message ?? line, parsed.exit_code ?? exitCode);
      }
    } catch {
      // not the error object; keep scanning
    }
  }
  return new HullAuditError(
    "subprocess_error",
    `auditor exited with code ${exitCode}: ${stderr || stdout || cause.message}`,
    exitCode,
  );
}

/** Create a scratch directory, hand it to `fn`, always clean up. */
export async function withWorkdir<T>(fn: (dir: string) => Promise<T>): Promise<T> {
  const dir = await mkdtemp(join(tmpdir(), "hullaudit-"));
  try {
    return await fn(dir);
  } finally {
    await rm(dir, { recursive: true, force: true });
  }
}
