/** Serialization of in-memory tables into the auditor's file formats. */

import type { AuditOptions, FeatureSpec, Row } from "./types.js";

function csvField(value: string | number): string {
  const text = typeof value === "number" ? String(value) : value;
  if (/[",\n\r]/.test(text)) {
    return `"${text.replace(/"/g, '""')}"`;
  }
  return text;
}

/** RFC-4180 CSV with a header row; column order follows `columns`. */
export function toCsv(columns: string[], rows: Row[]): string {
  const lines = [columns.map(csvField).join(",")];
  for (const row of rows) {
    lines.push(
      columns
        .map((c) => {
          const v = row[c];
          if (v === undefined || v === null) {
            throw new Error(`row is missing column '${c}'`);
          }
          return csvField(v);
        })
        .join(","),
    );
  }
  return lines.join("\n") + "\n";
}

function tomlString(value: string): string {
  return `"${value.replace(/\\/g, "\\\\").replace(/"/g, '\\"')}"`;
}

function tomlScalar(value: string | number | boolean): string {
  if (typeof value === "boolean") return value ? "true" : "false";
  if (typeof value === "number") return Number.isInteger(value) ? String(value) : String(value);
  return tomlString(value);
}

/** Render the schema + domain TOML the auditor CLI consumes. */
export function toSchemaToml(columns: FeatureSpec[], options: AuditOptions): string {
  const out: string[] = [];
  if (options.targetColumn) out.push(`target_column = ${tomlString(options.targetColumn)}`);
  out.push(`na_token = ${tomlString(options.naToken ?? "?")}`);
  for (const col of columns) {
    out.push("", "[[feature]]");
    out.push(`name = ${tomlString(col.name)}`);
    out.push(`kind = ${tomlString(col.kind)}`);
    if (col.lower !== undefined) out.push(`lower = ${tomlScalar(col.lower)}`);
    if (col.upper !== undefined) out.push(`upper = ${tomlScalar(col.upper)}`);
    if (col.kind === "categorical") {
      const levels = col.levels ?? [];
      out.push(`levels = [${levels.map(tomlString).join(", ")}]`);
      if (col.missingPolicy && col.missingPolicy !== "drop_row") {
        out.push(`missing_policy = ${tomlString(col.missingPolicy)}`);
      }
      if (col.optional) out.push("optional = true");
    }
  }
  const domain = options.domain ?? {};
  out.push("", "[domain]");
  out.push(`enforce_bounds = ${tomlScalar(domain.enforceBounds ?? true)}`);
  if (domain.pathGroups?.length) {
    out.push(`path_groups = [${domain.pathGroups.map(tomlString).join(", ")}]`);
  }
  if (domain.modes && Object.keys(domain.modes).length) {
    out.push("", "[domain.modes]");
    for (const [group, mode] of Object.entries(domain.modes)) {
      out.push(`${group} = ${tomlString(mode)}`);
    }
  }
  return out.join("\n") + "\n";
}

/** Column order used for every CSV we hand to the auditor. */
export function columnOrder(columns: FeatureSpec[], options: AuditOptions, rows: Row[]): string[] {
  const names = columns.map((c) => c.name);
  if (options.targetColumn && rows.every((r) => options.targetColumn! in r)) {
    names.push(options.targetColumn);
  }
  return names;
}
