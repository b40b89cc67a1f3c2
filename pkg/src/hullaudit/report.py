"""Audit records, aggregate statistics, and privacy-redacted narratives.

Per-sample records go to JSON Lines (one object per test row), the
aggregate summary to a single JSON document; both carry
``schema_version: "1"``. Redacted outputs keep dimension-level deltas but
suppress every training-sample identity and weight.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .hull_solver import BatchItem
from .ingest import EncodedDataset
from .schema import EncodingLayout

SCHEMA_VERSION = "1"

INSIDE = "inside"
OUTSIDE_PATH = "outside_path"
OUTSIDE_NO_PATH = "outside_no_path"

#: Floor for the relative-change denominator, |query value| in raw units.
EPS_REL = 1e-9


@dataclass
class SampleRecord:
    row_id: int
    status: str | None
    distance: float | None
    raw_distance: float | None
    per_feature_delta: list = field(default_factory=list)
    relative_change: dict = field(default_factory=dict)
    support: list | None = None
    support_suppressed: bool = False
    has_continuous_path: bool = True
    used_profile_fallback: bool = False
    certified: bool | None = None
    iterations: int | None = None
    algorithm: str | None = None
    delta_scaled: list | None = None
    error: str | None = None
    error_message: str | None = None

    def to_json_dict(self) -> dict:
        out = {
            "schema_version": SCHEMA_VERSION,
            "row_id": self.row_id,
            "status": self.status,
            "distance": self.distance,
            "raw_distance": self.raw_distance,
            "per_feature_delta": self.per_feature_delta,
            "relative_change": self.relative_change,
            "has_continuous_path": self.has_continuous_path,
            "used_profile_fallback": self.used_profile_fallback,
            "certified": self.certified,
            "iterations": self.iterations,
            "algorithm": self.algorithm,
        }
        if self.support_suppressed:
            out["support_suppressed"] = True
        else:
            out["support"] = self.support
        if self.delta_scaled is not None:
            out["delta_scaled"] = self.delta_scaled
        if self.error is not None:
            out["error"] = self.error
            out["error_message"] = self.error_message
        return out


@dataclass
class AuditSummary:
    counts: dict
    fractions: dict
    histogram: dict
    distance_stats: dict
    per_feature_mean_relative_change: dict
    config: dict
    ingest: dict
    directions: dict | None = None

    def to_json_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "counts": self.counts,
            "fractions": self.fractions,
            "histogram": self.histogram,
            "distance_stats": self.distance_stats,
            "per_feature_mean_relative_change": self.per_feature_mean_relative_change,
            "config": self.config,
            "ingest": self.ingest,
            "directions": self.directions,
        }


def _status_of(item: BatchItem) -> str:
    if not item.has_path:
        return OUTSIDE_NO_PATH
    if item.result.status == "inside":
        return INSIDE
    return OUTSIDE_PATH


def _feature_deltas(layout: EncodingLayout, query: np.ndarray, point: np.ndarray):
    """Raw-unit per-feature deltas; fractional categorical mass via decode."""
    decoded_q = layout.decode_point(query)
    decoded_p = layout.decode_point(point)
    deltas = []
    relative = {}
    for f in layout.schema.features:
        if f.is_numeric:
            q = float(decoded_q.values[f.name])
            p = float(decoded_p.values[f.name])
            change = p - q
            rel = abs(change) / max(abs(q), EPS_REL)
            relative[f.name] = rel
            deltas.append({
                "feature": f.name,
                "kind": f.kind,
                "query": q,
                "projected": p,
                "delta": change,
                "relative_change": rel,
            })
        else:
            qv = decoded_q.values[f.name]
            pv = decoded_p.values[f.name]
            levels = f.effective_levels()
            q_mass = {qv: 1.0} if isinstance(qv, str) and qv else dict(qv) if isinstance(qv, dict) else {}
            p_mass = {pv: 1.0} if isinstance(pv, str) and pv else dict(pv) if isinstance(pv, dict) else {}
            moved = 0.5 * sum(
                abs(p_mass.get(lv, 0.0) - q_mass.get(lv, 0.0)) for lv in levels
            )
            deltas.append({
                "feature": f.name,
                "kind": f.kind,
                "query": qv if isinstance(qv, str) else (qv or None),
                "projected": pv if isinstance(pv, str) else pv,
                "mass_moved": moved,
            })
    return deltas, relative


def build_records(items: list[BatchItem], train: EncodedDataset, test: EncodedDataset,
                  top_k: int = 10, redact: bool = False,
                  keep_scaled_deltas: bool = True) -> list[SampleRecord]:
    """Turn batch outcomes into per-sample audit records, batch order."""
    layout = train.layout
    records = []
    for item in items:
        row_id = int(test.row_ids[item.index])
        if item.result is None:
            records.append(SampleRecord(
                row_id=row_id, status=None, distance=None, raw_distance=None,
                has_continuous_path=item.has_path,
                support_suppressed=redact,
                error=item.error, error_message=item.error_message,
            ))
            continue
        res = item.result
        status = _status_of(item)
        query = test.matrix[item.index]
        deltas, relative = _feature_deltas(layout, query, res.point)
        rec = SampleRecord(
            row_id=row_id,
            status=status,
            distance=res.distance,
            raw_distance=res.raw_distance,
            per_feature_delta=deltas,
            relative_change=relative,
            has_continuous_path=item.has_path,
            used_profile_fallback=item.used_profile_fallback,
            certified=res.certified,
            iterations=res.iterations,
            algorithm=res.algorithm,
        )
        if redact:
            rec.support_suppressed = True
        else:
            ids = res.support_row_ids(train)
            pairs = [[float(a), int(rid)] for a, rid in zip(res.weights, ids)]
            rec.support = pairs[:top_k]
        if keep_scaled_deltas and status != INSIDE:
            rec.delta_scaled = (res.point - query).tolist()
        records.append(rec)
    return records


def summarize(records: list[SampleRecord], config_echo: dict, ingest_stats: dict,
              directions_summary: dict | None = None, bins: int = 30) -> AuditSummary:
    """Aggregate statistics over a batch of records.

    Deterministic, and echoes every configuration knob that affects the
    numbers so a report is reproducible from its own header.
    """
    counts = {INSIDE: 0, OUTSIDE_PATH: 0, OUTSIDE_NO_PATH: 0, "error": 0}
    for r in records:
        if r.status is None:
            counts["error"] += 1
        else:
            counts[r.status] += 1
    ok = counts[INSIDE] + counts[OUTSIDE_PATH] + counts[OUTSIDE_NO_PATH]
    fractions = {
        k: (counts[k] / ok if ok else 0.0)
        for k in (INSIDE, OUTSIDE_PATH, OUTSIDE_NO_PATH)
    }
    fractions["outside_total"] = fractions[OUTSIDE_PATH] + fractions[OUTSIDE_NO_PATH]

    outside = [r for r in records if r.status in (OUTSIDE_PATH, OUTSIDE_NO_PATH)]
    scaled = np.array([r.distance for r in outside], dtype=float)
    raw = np.array([r.raw_distance for r in outside], dtype=float)
    histogram = {"scaled": _hist(scaled, bins), "raw": _hist(raw, bins)}
    distance_stats = {
        "scaled": _stats(scaled),
        "raw": _stats(raw),
    }

    mean_rel: dict[str, float] = {}
    path_records = [r for r in records if r.status == OUTSIDE_PATH]
    if path_records:
        keys = path_records[0].relative_change.keys()
        for k in keys:
            vals = [r.relative_change[k] for r in path_records if k in r.relative_change]
            if vals:
                mean_rel[k] = float(np.mean(vals))

    return AuditSummary(
        counts=counts,
        fractions=fractions,
        histogram=histogram,
        distance_stats=distance_stats,
        per_feature_mean_relative_change=mean_rel,
        config=config_echo,
        ingest=ingest_stats,
        directions=directions_summary,
    )


def _hist(values: np.ndarray, bins: int) -> dict:
    values = values[np.isfinite(values)]
    if values.size == 0:
        return {"edges": [], "counts": []}
    counts, edges = np.histogram(values, bins=bins)
    return {"edges": edges.tolist(), "counts": counts.tolist()}


def _stats(values: np.ndarray) -> dict:
    values = values[np.isfinite(values)]
    if values.size == 0:
        return {"mean": None, "std": None, "max": None, "count": 0}
    return {
        "mean": float(values.mean()),
        "std": float(values.std()),
        "max": float(values.max()),
        "count": int(values.size),
    }


def explain_sample(record: SampleRecord, layout: EncodingLayout, redact: bool = False) -> str:
    """Structured narrative block for one record.

    Redacted blocks keep which dimensions moved and by how much, but carry
    no training row ids and no weights.
    """
    lines = [f"sample {record.row_id}:"]
    if record.status is None:
        lines.append(f"  no projection ({record.error}: {record.error_message})")
        return "\n".join(lines)
    if record.status == INSIDE:
        lines.append("  interpolation; the query lies in the admitted hull (no deltas)")
        return "\n".join(lines)
    label = "no continuous path" if record.status == OUTSIDE_NO_PATH else "continuous path"
    lines.append(f"  extrapolation ({label})")
    if record.used_profile_fallback:
        lines.append("  projection shown switches pinned categorical levels (nearest seen profile)")
    lines.append(f"  distance: {record.distance:.6g} scaled / {record.raw_distance:.6g} raw units")
    moved = []
    for entry in record.per_feature_delta:
        if entry["kind"] == "categorical":
            if entry.get("mass_moved", 0.0) > 1e-12:
                moved.append((entry["mass_moved"], _categorical_line(entry)))
        elif abs(entry.get("delta", 0.0)) > 1e-12:
            moved.append((entry["relative_change"], _numeric_line(entry)))
    moved.sort(key=lambda t: -t[0])
    if moved:
        lines.append("  feature changes (largest relative first):")
        lines.extend(f"    {text}" for _, text in moved)
    else:
        lines.append("  no per-feature change above reporting precision")
    if redact or record.support_suppressed:
        lines.append("  support: (suppressed)")
    elif record.support:
        parts = ", ".join(f"{a:.3f} * row {rid}" for a, rid in record.support)
        lines.append(f"  support: {parts}")
    return "\n".join(lines)


def _numeric_line(entry: dict) -> str:
    return (f"{entry['feature']}: {entry['query']:.6g} -> {entry['projected']:.6g} "
            f"({entry['delta']:+.6g}, {100 * entry['relative_change']:.1f}%)")


def _categorical_line(entry: dict) -> str:
    target = entry["projected"]
    if isinstance(target, dict):
        mix = " / ".join(f"{100 * w:.0f}% {lv}" for lv, w in sorted(target.items(), key=lambda t: -t[1]))
    else:
        mix = str(target)
    return f"{entry['feature']}: {entry['query']} -> {mix} (mass moved {entry['mass_moved']:.2f})"


# -- file writers ------------------------------------------------------------

def write_records_jsonl(records: list[SampleRecord], path: str) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_json_dict()) + "\n")


def read_records_jsonl(path: str) -> list[dict]:
    out = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out


def write_summary_json(summary: AuditSummary, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(summary.to_json_dict(), fh, indent=2)
        fh.write("\n")


def records_to_csv(records: list[SampleRecord], path: str) -> None:
    """Optional flat CSV view of the records (numeric deltas only)."""
    numeric = sorted({
        e["feature"] for r in records for e in r.per_feature_delta if e["kind"] != "categorical"
    })
    header = ["row_id", "status", "distance", "raw_distance", "has_continuous_path"]
    header += [f"delta:{n}" for n in numeric] + [f"relative_change:{n}" for n in numeric]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for r in records:
            by_name = {e["feature"]: e for e in r.per_feature_delta if e["kind"] != "categorical"}
            row = [r.row_id, r.status, r.distance, r.raw_distance, r.has_continuous_path]
            row += [by_name.get(n, {}).get("delta") for n in numeric]
            row += [by_name.get(n, {}).get("relative_change") for n in numeric]
            writer.writerow(row)
