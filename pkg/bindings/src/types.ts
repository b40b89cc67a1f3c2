/** A raw tabular row; values are kept as strings or numbers as supplied. */
export type Row = Record<string, string | number>;

export type FeatureKind = "continuous" | "integer" | "categorical";

/** Declaration of one feature column (mirrors the auditor's schema file). */
export interface FeatureSpec {
  name: string;
  kind: FeatureKind;
  levels?: string[];
  lower?: number;
  upper?: number;
  missingPolicy?: "drop_row" | "as_level";
  optional?: boolean;
}

export type DomainMode = "fixed_to_query" | "discrete_exclusive" | "relaxed_mixture";

export interface DomainOptions {
  /** Per-categorical-group projection mode; unlisted groups relax to mixtures. */
  modes?: Record<string, DomainMode>;
  /** Groups whose exact-match check defines the no-path status. */
  pathGroups?: string[];
  enforceBounds?: boolean;
}

export interface AuditOptions {
  targetColumn?: string;
  naToken?: string;
  domain?: DomainOptions;
  scaler?: "zscore" | "minmax" | "none";
  method?: "exact" | "homotopy";
  algorithm?: "gradient_projection" | "frank_wolfe" | "dual" | "auto";
  membershipEps?: number;
  tolOpt?: number;
  maxIter?: number;
  threads?: number;
  seed?: number;
  redact?: boolean;
  topK?: number;
  /** On an unseen pinned profile, project to the nearest seen one (project only). */
  allowProfileFallback?: boolean;
  /** Python interpreter carrying the hullaudit package (default: python3). */
  pythonPath?: string;
  /** Extra time budget for the subprocess, in milliseconds. */
  timeoutMs?: number;
}

export type SampleStatus = "inside" | "outside_path" | "outside_no_path";

export interface FeatureDelta {
  feature: string;
  kind: FeatureKind;
  query: number | string | Record<string, number> | null;
  projected: number | string | Record<string, number> | null;
  delta?: number;
  relative_change?: number;
  mass_moved?: number;
}

/** One audited test row, exactly as the auditor's records.jsonl emits it. */
export interface SampleRecord {
  schema_version: string;
  row_id: number;
  status: SampleStatus | null;
  distance: number | null;
  raw_distance: number | null;
  per_feature_delta: FeatureDelta[];
  relative_change: Record<string, number>;
  has_continuous_path: boolean;
  used_profile_fallback: boolean;
  certified: boolean | null;
  iterations: number | null;
  algorithm: string | null;
  support?: [number, number][];
  support_suppressed?: boolean;
  delta_scaled?: number[];
  error?: string;
  error_message?: string;
}

export interface AuditSummary {
  schema_version: string;
  counts: Record<string, number>;
  fractions: Record<string, number>;
  histogram: {
    scaled: { edges: number[]; counts: number[] };
    raw: { edges: number[]; counts: number[] };
  };
  distance_stats: Record<string, unknown>;
  per_feature_mean_relative_change: Record<string, number>;
  config: Record<string, unknown>;
  ingest: Record<string, unknown>;
  directions: Record<string, unknown> | null;
}

export interface PathCheckResult {
  groups: string[];
  rows: number;
  fraction: number;
  fraction_no_path: number;
  per_row: boolean[];
}

export interface DirectionsReport {
  numerical_rank: number;
  rank_tol: number;
  condition_number: number;
  singular_values: number[];
  dominant_patterns: number;
  energy_threshold: number;
  redundant_candidates: {
    column: number;
    label: string;
    condition_number_after_drop: number;
  }[];
  clustering: {
    selected_k: number;
    assignments: number[];
    silhouette_by_k: Record<string, number>;
    seed: number;
  } | null;
}

/** Error carrying the auditor's stable machine-readable code and exit status. */
export class HullAuditError extends Error {
  readonly code: string;
  readonly exitCode: number;

  constructor(code: string, message: string, exitCode: number) {
    super(message);
    this.name = "HullAuditError";
    this.code = code;
    this.exitCode = exitCode;
  }
}
