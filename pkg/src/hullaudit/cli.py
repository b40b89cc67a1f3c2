"""Command-line driver: ingest -> projection -> directions -> report.

Subcommands: ``audit``, ``project``, ``directions``, ``path-check``.
Configuration precedence is flags > environment > config file > defaults;
``HULLAUDIT_THREADS`` overrides worker count when no flag is given. Every
run echoes its full effective configuration (stderr and the summary), and
failures print machine-readable JSON on stderr with stable exit codes:
2 infeasible domain, 3 config/schema error, 4 parse error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import directions as dirs
from . import discrete_domain as dd
from . import hull_solver as hs
from . import presets as ps
from . import report as rp
from . import schema as sc
from .errors import ConfigError, HullAuditError
from .ingest import LoadOptions, load_dataset, subprofile_of

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    try:
        with open(path, "rb") as fh:
            return _toml.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except _toml.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}")


def _resolve(flag, env_name, cfg_value, default, cast=lambda v: v):
    if flag is not None:
        return flag
    if env_name and os.environ.get(env_name) is not None:
        return cast(os.environ[env_name])
    if cfg_value is not None:
        return cfg_value
    return default


def _schema_and_domain(args) -> tuple[sc.FeatureSchema, sc.DomainSpec, LoadOptions, LoadOptions]:
    if getattr(args, "preset", None):
        factory = ps.PRESETS.get(args.preset)
        if factory is None:
            raise ConfigError(f"unknown preset {args.preset!r}; available: {sorted(ps.PRESETS)}")
        if args.preset == "adult":
            preset = factory(missing_policy=args.missing_policy or sc.DROP_ROW)
        else:
            preset = factory()
        schema, domain = preset.schema, preset.domain
        train_opts = preset.train_options
        test_opts = preset.test_options or preset.train_options
    elif getattr(args, "schema", None):
        schema, domain, extras = sc.load_schema_file(args.schema)
        if args.missing_policy:
            schema = sc.with_missing_policy(schema, args.missing_policy)
            domain = domain.validate(schema)
        opts = LoadOptions(na_token=extras.get("na_token", "?"), **extras.get("loader", {}))
        train_opts = test_opts = opts
    else:
        raise ConfigError("one of --schema or --preset is required")

    for override in getattr(args, "domain_mode", None) or []:
        if "=" not in override:
            raise ConfigError(f"--domain-mode expects group=mode, got {override!r}")
        group, mode = override.split("=", 1)
        modes = dict(domain.modes)
        if group == "all":
            modes = {g: mode for g in modes}
        else:
            modes[group] = mode
        domain = sc.DomainSpec(modes=modes, enforce_bounds=domain.enforce_bounds,
                               path_groups=domain.path_groups)
    if getattr(args, "path_groups", None):
        domain = sc.DomainSpec(modes=dict(domain.modes), enforce_bounds=domain.enforce_bounds,
                               path_groups=tuple(args.path_groups.split(",")))
    return schema, domain.validate(schema), train_opts, test_opts


def _solver_config(args, cfg_file: dict) -> tuple[hs.SolverConfig, int, int]:
    solver_cfg = cfg_file.get("solver", {})
    audit_cfg = cfg_file.get("audit", {})
    eps = _resolve(args.eps, None, solver_cfg.get("membership_eps"), 1e-6, float)
    algorithm = _resolve(getattr(args, "algorithm", None), None, solver_cfg.get("algorithm"), hs.ALGO_GP)
    tol_opt = _resolve(getattr(args, "tol_opt", None), None, solver_cfg.get("tol_opt"), 1e-8, float)
    max_iter = _resolve(getattr(args, "max_iter", None), None, solver_cfg.get("max_iter"), 10_000, int)
    config = hs.SolverConfig(algorithm=algorithm, tol_opt=tol_opt,
                             membership_eps=eps, max_iter=max_iter)
    threads = _resolve(args.threads, "HULLAUDIT_THREADS", audit_cfg.get("threads"), 1, int)
    seed = _resolve(args.seed, None, audit_cfg.get("seed"), 42, int)
    return config, int(threads), int(seed)


def run_audit(schema, domain, train_csv, test_csv, train_opts, test_opts,
              scaler=sc.ZSCORE, config=None, method=hs.METHOD_EXACT,
              threads=1, seed=42, redact=False, top_k=10, out_dir=None,
              k_range=range(2, 9), energy=0.95):
    """Full audit pipeline; returns (records, summary, directions_report)."""
    config = config or hs.SolverConfig()
    train, train_stats = load_dataset(schema, train_csv, role="train",
                                      scaler_kind=scaler, options=train_opts,
                                      enforce_bounds=domain.enforce_bounds)
    test, test_stats = load_dataset(schema, test_csv, role="test",
                                    layout=train.layout, options=test_opts)
    items = hs.batch_project(train, test, domain, config, method=method, threads=threads)
    records = rp.build_records(items, train, test, top_k=top_k, redact=redact)

    statuses = [r.status for r in records]
    directions_report = None
    try:
        V = dirs.build_directions(items, test, statuses=statuses)
        directions_report = dirs.analyze(V, energy_threshold=energy, k_range=k_range, seed=seed)
    except dirs.NoOutsideSamples:
        pass

    config_echo = {
        "scaler": scaler,
        "solver": config.to_json_dict(),
        "domain": domain.to_json_dict(),
        "method": method,
        "threads": threads,
        "seed": seed,
        "redact": redact,
        "top_k": top_k,
        "relative_change_floor": rp.EPS_REL,
    }
    ingest_stats = {"train": train_stats.to_json_dict(), "test": test_stats.to_json_dict()}
    dir_summary = directions_report.to_json_dict() if directions_report else None
    summary = rp.summarize(records, config_echo, ingest_stats, directions_summary=dir_summary)

    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        rp.write_records_jsonl(records, os.path.join(out_dir, "records.jsonl"))
        rp.write_summary_json(summary, os.path.join(out_dir, "summary.json"))
        with open(os.path.join(out_dir, "directions.json"), "w") as fh:
            json.dump({"schema_version": rp.SCHEMA_VERSION, "report": dir_summary}, fh, indent=2)
            fh.write("\n")
    return records, summary, directions_report


def _cmd_audit(args) -> int:
    cfg_file = _load_config_file(args.config)
    schema, domain, train_opts, test_opts = _schema_and_domain(args)
    config, threads, seed = _solver_config(args, cfg_file)
    _echo_config(args, config, domain, threads, seed)
    _records, summary, _dirs = run_audit(
        schema, domain, args.train, args.test, train_opts, test_opts,
        scaler=args.scaler, config=config, method=args.method, threads=threads,
        seed=seed, redact=args.redact, top_k=args.top_k, out_dir=args.out,
        k_range=_parse_k_range(args.k_range), energy=args.energy,
    )
    print(json.dumps({
        "out": args.out,
        "counts": summary.counts,
        "fractions": summary.fractions,
    }))
    return 0


def _cmd_project(args) -> int:
    cfg_file = _load_config_file(args.config)
    schema, domain, train_opts, _ = _schema_and_domain(args)
    config, _threads, seed = _solver_config(args, cfg_file)
    _echo_config(args, config, domain, 1, seed)
    train, _stats = load_dataset(schema, args.train, role="train",
                                 scaler_kind=args.scaler, options=train_opts,
                                 enforce_bounds=domain.enforce_bounds)
    row = _read_query(args.query, train_opts)
    query = train.layout.encode_row(row)
    result, has_path, fallback = hs.project_one(
        query, train, domain, config, method=args.method,
        no_path_fallback=args.allow_profile_fallback)
    item = hs.BatchItem(index=0, result=result, has_path=has_path,
                        used_profile_fallback=fallback)
    from .ingest import EncodedDataset

    one = EncodedDataset(query.reshape(1, -1), np.array([0]), train.layout)
    records = rp.build_records([item], train, one, top_k=args.top_k, redact=args.redact)
    if args.json:
        print(json.dumps(records[0].to_json_dict()))
    else:
        print(rp.explain_sample(records[0], train.layout, redact=args.redact))
    return 0


def _cmd_directions(args) -> int:
    cfg_file = _load_config_file(args.config)
    schema, domain, train_opts, _ = _schema_and_domain(args)
    _config, _threads, seed = _solver_config(args, cfg_file)
    train, _stats = load_dataset(schema, args.train, role="train",
                                 scaler_kind=args.scaler, options=train_opts)
    rows = rp.read_records_jsonl(args.records)
    deltas, ids = [], []
    for rec in rows:
        if rec.get("status") == rp.OUTSIDE_PATH and rec.get("delta_scaled"):
            deltas.append(rec["delta_scaled"])
            ids.append(rec["row_id"])
    if not deltas:
        raise dirs.NoOutsideSamples("records carry no outside-with-path scaled deltas")
    V = dirs.DirectionsMatrix(
        matrix=np.asarray(deltas, dtype=float),
        row_ids=np.asarray(ids),
        column_labels=tuple(train.layout.column_labels()),
    )
    report = dirs.analyze(V, energy_threshold=args.energy,
                          k_range=_parse_k_range(args.k_range), seed=seed)
    print(json.dumps({"schema_version": rp.SCHEMA_VERSION, "report": report.to_json_dict()}))
    return 0


def _cmd_path_check(args) -> int:
    schema, domain, train_opts, test_opts = _schema_and_domain(args)
    train, _ = load_dataset(schema, args.train, role="train",
                            scaler_kind=sc.NOSCALE, options=train_opts)
    test, _ = load_dataset(schema, args.test, role="test", layout=train.layout,
                           options=test_opts)
    groups = tuple(g for g in (args.groups.split(",") if args.groups else []) if g)
    flags = []
    for i in range(test.n):
        flags.append(bool(dd.has_continuous_path(test.matrix[i], train, groups)))
    frac = float(np.mean(flags)) if flags else 1.0
    print(json.dumps({
        "groups": list(groups),
        "rows": len(flags),
        "fraction": frac,
        "fraction_no_path": 1.0 - frac,
        "per_row": flags,
    }))
    return 0


def _read_query(spec_arg: str, opts: LoadOptions) -> dict:
    text = spec_arg.strip()
    if text.startswith("{"):
        return json.loads(text)
    if text.endswith(".json"):
        with open(text) as fh:
            return json.load(fh)
    from .ingest import read_rows

    rows, _ = read_rows(text, opts)
    if len(rows) != 1:
        raise ConfigError(f"query CSV must contain exactly one data row, got {len(rows)}")
    return rows[0]


def _parse_k_range(text: str) -> range:
    lo, _, hi = text.partition(":")
    return range(int(lo), int(hi) + 1)


def _echo_config(args, config, domain, threads, seed) -> None:
    echo = {
        "command": args.command,
        "solver": config.to_json_dict(),
        "domain": domain.to_json_dict(),
        "scaler": getattr(args, "scaler", None),
        "method": getattr(args, "method", None),
        "threads": threads,
        "seed": seed,
        "redact": getattr(args, "redact", False),
    }
    print(json.dumps({"effective_config": echo}), file=sys.stderr)


def _add_shared(p: argparse.ArgumentParser, query_mode: bool = False) -> None:
    p.add_argument("--schema", help="TOML schema file")
    p.add_argument("--preset", help="bundled dataset preset (adult, fico, vacs_like)")
    p.add_argument("--train", required=True, help="training CSV")
    p.add_argument("--scaler", default=sc.ZSCORE, choices=[sc.ZSCORE, sc.MINMAX, sc.NOSCALE])
    p.add_argument("--method", default=hs.METHOD_EXACT, choices=[hs.METHOD_EXACT, hs.METHOD_HOMOTOPY])
    p.add_argument("--algorithm", choices=[hs.ALGO_GP, hs.ALGO_FW, hs.ALGO_DUAL, hs.ALGO_AUTO])
    p.add_argument("--eps", type=float, help="membership epsilon in scaled space")
    p.add_argument("--tol-opt", dest="tol_opt", type=float)
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--redact", action="store_true", help="suppress training identities and weights")
    p.add_argument("--top-k", dest="top_k", type=int, default=10)
    p.add_argument("--config", help="optional TOML config file ([solver]/[audit] tables)")
    p.add_argument("--domain-mode", dest="domain_mode", action="append", metavar="GROUP=MODE",
                   help="override a categorical group's domain mode (or all=MODE)")
    p.add_argument("--path-groups", dest="path_groups",
                   help="comma-separated groups defining the no-path status")
    p.add_argument("--missing-policy", dest="missing_policy",
                   choices=[sc.DROP_ROW, sc.AS_LEVEL])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hullaudit",
                                     description="Audit interpolation vs extrapolation "
                                                 "against a training set's convex hull.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("audit", help="full batch audit writing records/summary/directions")
    _add_shared(p)
    p.add_argument("--test", required=True, help="test CSV")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--k-range", dest="k_range", default="2:8")
    p.add_argument("--energy", type=float, default=0.95)
    p.set_defaults(func=_cmd_audit)

    p = sub.add_parser("project", help="project one query and explain it")
    _add_shared(p)
    p.add_argument("--query", required=True, help="inline JSON object, .json path, or one-row CSV")
    p.add_argument("--json", action="store_true", help="emit the record JSON instead of text")
    p.add_argument("--allow-profile-fallback", action="store_true",
                   help="on an unseen pinned profile, project to the nearest seen one "
                        "instead of failing with exit 2")
    p.set_defaults(func=_cmd_project)

    p = sub.add_parser("directions", help="spectrum + clusters from an audit's records")
    _add_shared(p)
    p.add_argument("--records", required=True, help="records.jsonl from a previous audit")
    p.add_argument("--k-range", dest="k_range", default="2:8")
    p.add_argument("--energy", type=float, default=0.95)
    p.set_defaults(func=_cmd_directions)

    p = sub.add_parser("path-check", help="scaling-independent continuous-path check")
    _add_shared(p)
    p.add_argument("--test", required=True, help="test CSV")
    p.add_argument("--groups", default="", help="comma-separated categorical groups")
    p.set_defaults(func=_cmd_path_check)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except HullAuditError as exc:
        print(json.dumps(exc.to_json_dict()), file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(json.dumps({"error": "config_error", "message": str(exc), "exit_code": 3}),
              file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
