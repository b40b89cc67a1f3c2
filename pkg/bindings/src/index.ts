/**
 * In-memory tabular bindings for the hullaudit extrapolation auditor.
 *
 * The auditor runs out of process behind its stable command-line and file
 * interfaces: rows go out as CSV plus a TOML schema, results come back as
 * the documented JSON formats, bit-for-bit identical to driving the CLI by
 * hand on the same inputs.
 */

import { readFile, writeFile } from "node:fs/promises";
import { join } from "node:path";

import { runCli, withWorkdir } from "./runner.js";
import { columnOrder, toCsv, toSchemaToml } from "./tabular.js";
import type {
  AuditOptions,
  AuditSummary,
  DirectionsReport,
  FeatureSpec,
  PathCheckResult,
  Row,
  SampleRecord,
} from "./types.js";

export * from "./types.js";

function solverFlags(options: AuditOptions): string[] {
  const flags: string[] = [];
  if (options.scaler) flags.push("--scaler", options.scaler);
  if (options.method) flags.push("--method", options.method);
  if (options.algorithm) flags.push("--algorithm", options.algorithm);
  if (options.membershipEps !== undefined) flags.push("--eps", String(options.membershipEps));
  if (options.tolOpt !== undefined) flags.push("--tol-opt", String(options.tolOpt));
  if (options.maxIter !== undefined) flags.push("--max-iter", String(options.maxIter));
  if (options.threads !== undefined) flags.push("--threads", String(options.threads));
  if (options.seed !== undefined) flags.push("--seed", String(options.seed));
  if (options.topK !== undefined) flags.push("--top-k", String(options.topK));
  if (options.redact) flags.push("--redact");
  return flags;
}

async function stageInputs(dir: string, train: Row[], columns: FeatureSpec[],
                           options: AuditOptions): Promise<{ schema: string; train: string; cols: string[] }> {
  const schemaPath = join(dir, "schema.toml");
  const trainPath = join(dir, "train.csv");
  const cols = columnOrder(columns, options, train);
  await writeFile(schemaPath, toSchemaToml(columns, options));
  await writeFile(trainPath, toCsv(cols, train));
  return { schema: schemaPath, train: trainPath, cols };
}

function parseJsonl<T>(text: string): T[] {
  return text
    .split(/\r?\n/)
    .filter((line) => line.trim().length > 0)
    .map((line) => JSON.parse(line) as T);
}

/**
 * Audit every test row against the hull of the training rows.
 *
 * Mirrors `hullaudit audit` exactly on the same inputs; see the auditor's
 * README for the record and summary field contracts.
 */
export async function bindAudit(
  train: Row[],
  columns: FeatureSpec[],
  test: Row[],
  options: AuditOptions = {},
): Promise<{ records: SampleRecord[]; summary: AuditSummary }> {
  return withWorkdir(async (dir) => {
    const staged = await stageInputs(dir, train, columns, options);
    const testPath = join(dir, "test.csv");
    await writeFile(testPath, toCsv(staged.cols, test));
    const outDir = join(dir, "out");
    await runCli(
      ["audit", "--schema", staged.schema, "--train", staged.train,
        "--test", testPath, "--out", outDir, ...solverFlags(options)],
      options,
    );
    const records = parseJsonl<SampleRecord>(await readFile(join(outDir, "records.jsonl"), "utf8"));
    const summary = JSON.parse(await readFile(join(outDir, "summary.json"), "utf8")) as AuditSummary;
    return { records, summary };
  });
}

/** Project a single query row; the explained record comes back as JSON. */
export async function bindProject(
  train: Row[],
  columns: FeatureSpec[],
  query: Row,
  options: AuditOptions = {},
): Promise<SampleRecord> {
  return withWorkdir(async (dir) => {
    const staged = await stageInputs(dir, train, columns, options);
    const args = ["project", "--schema", staged.schema, "--train", staged.train,
      "--query", JSON.stringify(query), "--json", ...solverFlags(options)];
    if (options.allowProfileFallback) args.push("--allow-profile-fallback");
    const { stdout } = await runCli(args, options);
    return JSON.parse(stdout) as SampleRecord;
  });
}

/** Scaling-independent continuous-path check over the named groups. */
export async function bindPathCheck(
  train: Row[],
  columns: FeatureSpec[],
  test: Row[],
  groups: string[],
  options: AuditOptions = {},
): Promise<PathCheckResult> {
  return withWorkdir(async (dir) => {
    const staged = await stageInputs(dir, train, columns, options);
    const testPath = join(dir, "test.csv");
    await writeFile(testPath, toCsv(staged.cols, test));
    const { stdout } = await runCli(
      ["path-check", "--schema", staged.schema, "--train", staged.train,
        "--test", testPath, "--groups", groups.join(",")],
      options,
    );
    return JSON.parse(stdout) as PathCheckResult;
  });
}

/** Spectrum and cluster analysis over a previous audit's records. */
export async function bindDirections(
  train: Row[],
  columns: FeatureSpec[],
  records: SampleRecord[],
  options: AuditOptions & { kRange?: [number, number]; energy?: number } = {},
): Promise<DirectionsReport> {
  return withWorkdir(async (dir) => {
    const staged = await stageInputs(dir, train, columns, options);
    const recordsPath = join(dir, "records.jsonl");
    await writeFile(recordsPath, records.map((r) => JSON.stringify(r)).join("\n") + "\n");
    const args = ["directions", "--schema", staged.schema, "--train", staged.train,
      "--records", recordsPath, ...solverFlags(options)];
    if (options.kRange) args.push("--k-range", `${options.kRange[0]}:${options.kRange[1]}`);
    if (options.energy !== undefined) args.push("--energy", String(options.energy));
    const { stdout } = await runCli(args, options);
    return (JSON.parse(stdout) as { report: DirectionsReport }).report;
  });
}
