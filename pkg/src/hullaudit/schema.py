"""Feature space declaration, numeric encoding, and domain specification.

A :class:`FeatureSchema` declares what the raw columns are; an
:class:`EncodingLayout` pins down the mapping into the numeric design
space (one-hot expansion of categoricals, scaling of numeric columns,
fit on training rows only); a :class:`DomainSpec` declares which parts
of that space a projection is allowed to use.

Schema files are TOML: scalar keys plus one ``[[feature]]`` table per
feature and an optional ``[domain]`` table. See ``README.md`` for the
documented format.
"""

from __future__ import annotations

import io
import sys
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, DimensionMismatch, EmptyTrainingSet, SchemaError

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

CONTINUOUS = "continuous"
INTEGER = "integer"
CATEGORICAL = "categorical"

DROP_ROW = "drop_row"
AS_LEVEL = "as_level"

ZSCORE = "zscore"
MINMAX = "minmax"
NOSCALE = "none"

FIXED_TO_QUERY = "fixed_to_query"
DISCRETE_EXCLUSIVE = "discrete_exclusive"
RELAXED_MIXTURE = "relaxed_mixture"

_MODES = (FIXED_TO_QUERY, DISCRETE_EXCLUSIVE, RELAXED_MIXTURE)
_KINDS = (CONTINUOUS, INTEGER, CATEGORICAL)
_SCALERS = (ZSCORE, MINMAX, NOSCALE)

#: Level name substituted for missing categorical values under ``as_level``.
MISSING_LEVEL = "Unknown"


@dataclass(frozen=True)
class FeatureDecl:
    """Declaration of one raw feature.

    ``lower``/``upper`` only apply to numeric kinds, ``levels`` and
    ``missing_policy=as_level`` only to categoricals. ``optional`` marks a
    categorical group whose rows may carry no level at all (empty string in
    the CSV), which turns the group-sum constraint into "at most one".
    """

    name: str
    kind: str
    lower: float | None = None
    upper: float | None = None
    levels: tuple[str, ...] = ()
    missing_policy: str = DROP_ROW
    optional: bool = False

    def __post_init__(self):
        if not self.name:
            raise SchemaError("feature name must be non-empty")
        if self.kind not in _KINDS:
            raise SchemaError(f"unknown feature kind {self.kind!r} for {self.name!r}")
        if self.kind == CATEGORICAL:
            if len(self.levels) < 2:
                raise SchemaError(f"categorical {self.name!r} needs >= 2 levels")
            if len(set(self.levels)) != len(self.levels):
                raise SchemaError(f"categorical {self.name!r} has duplicate levels")
            if self.lower is not None or self.upper is not None:
                raise SchemaError(f"bounds are not valid on categorical {self.name!r}")
        else:
            if self.levels:
                raise SchemaError(f"levels are not valid on numeric {self.name!r}")
            if self.missing_policy == AS_LEVEL:
                raise SchemaError(
                    f"missing_policy 'as_level' only applies to categoricals ({self.name!r})"
                )
            if self.optional:
                raise SchemaError(f"'optional' only applies to categoricals ({self.name!r})")
            if self.lower is not None and self.upper is not None and self.lower > self.upper:
                raise SchemaError(f"lower > upper on {self.name!r}")
        if self.missing_policy not in (DROP_ROW, AS_LEVEL):
            raise SchemaError(f"unknown missing_policy {self.missing_policy!r}")

    @property
    def is_numeric(self) -> bool:
        return self.kind in (CONTINUOUS, INTEGER)

    def effective_levels(self) -> tuple[str, ...]:
        """Level list actually encoded, including the synthetic missing level."""
        if self.kind == CATEGORICAL and self.missing_policy == AS_LEVEL and MISSING_LEVEL not in self.levels:
            return self.levels + (MISSING_LEVEL,)
        return self.levels


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered feature declarations plus an optional target column.

    The target column is carried through ingestion for bookkeeping but is
    excluded from all geometry.
    """

    features: tuple[FeatureDecl, ...]
    target_column: str | None = None

    def __post_init__(self):
        if not self.features:
            raise SchemaError("schema needs at least one feature")
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise SchemaError("feature names must be unique")
        if self.target_column in names:
            raise SchemaError("target column may not also be a feature")

    @property
    def feature_names(self) -> list[str]:
        return [f.name for f in self.features]

    @property
    def categorical_features(self) -> list[FeatureDecl]:
        return [f for f in self.features if f.kind == CATEGORICAL]

    @property
    def numeric_features(self) -> list[FeatureDecl]:
        return [f for f in self.features if f.is_numeric]

    def feature(self, name: str) -> FeatureDecl:
        for f in self.features:
            if f.name == name:
                return f
        raise SchemaError(f"no feature named {name!r}")

    def encoded_width(self) -> int:
        return sum(
            1 if f.is_numeric else len(f.effective_levels()) for f in self.features
        )


@dataclass(frozen=True)
class DomainSpec:
    """Projection domain: one mode per categorical group plus bound policy.

    ``modes`` maps every categorical feature name to one of
    ``fixed_to_query`` (group coordinates pinned to the query's),
    ``discrete_exclusive`` (pure one-hot enforced, level free), or
    ``relaxed_mixture`` (fractional mixtures allowed). ``path_groups``
    lists the groups whose exact-match check defines the
    "no continuous path" status; it defaults to the fixed groups.
    """

    modes: dict[str, str] = field(default_factory=dict)
    enforce_bounds: bool = True
    path_groups: tuple[str, ...] | None = None

    def validate(self, schema: FeatureSchema) -> "DomainSpec":
        cat_names = [f.name for f in schema.categorical_features]
        modes = dict(self.modes)
        for name in modes:
            if name not in cat_names:
                raise SchemaError(f"domain mode given for non-categorical {name!r}")
            if modes[name] not in _MODES:
                raise SchemaError(f"unknown domain mode {modes[name]!r} for {name!r}")
        for name in cat_names:
            modes.setdefault(name, RELAXED_MIXTURE)
        path = self.path_groups
        if path is None:
            path = tuple(n for n in cat_names if modes[n] == FIXED_TO_QUERY)
        else:
            for g in path:
                if g not in cat_names:
                    raise SchemaError(f"path group {g!r} is not a categorical feature")
        return DomainSpec(modes=modes, enforce_bounds=self.enforce_bounds, path_groups=tuple(path))

    def groups_with_mode(self, mode: str) -> list[str]:
        return [g for g, m in self.modes.items() if m == mode]

    @property
    def fixed_groups(self) -> list[str]:
        return self.groups_with_mode(FIXED_TO_QUERY)

    @property
    def discrete_groups(self) -> list[str]:
        return self.groups_with_mode(DISCRETE_EXCLUSIVE)

    def to_json_dict(self) -> dict:
        return {
            "modes": dict(self.modes),
            "enforce_bounds": self.enforce_bounds,
            "path_groups": list(self.path_groups or ()),
        }


class EncodingLayout:
    """Frozen mapping between raw rows and points in the encoded space.

    Columns are laid out feature by feature in schema order: one column per
    numeric feature, a contiguous block of one column per level for each
    categorical. Numeric columns carry affine scaler parameters
    (``encoded = (raw - offset) / scale``) fit on the training rows only;
    one-hot columns are never scaled.

    Immutable after construction and safe to share across workers.
    """

    def __init__(self, schema: FeatureSchema, scaler_kind: str,
                 offsets: np.ndarray, scales: np.ndarray):
        if scaler_kind not in _SCALERS:
            raise SchemaError(f"unknown scaler kind {scaler_kind!r}")
        self.schema = schema
        self.scaler_kind = scaler_kind
        self.columns: list[tuple[str, str | None]] = []
        self.group_spans: dict[str, tuple[int, int]] = {}
        self.numeric_columns: dict[str, int] = {}
        self.level_index: dict[str, dict[str, int]] = {}
        col = 0
        for f in schema.features:
            if f.is_numeric:
                self.columns.append((f.name, None))
                self.numeric_columns[f.name] = col
                col += 1
            else:
                levels = f.effective_levels()
                self.group_spans[f.name] = (col, col + len(levels))
                self.level_index[f.name] = {lv: i for i, lv in enumerate(levels)}
                for lv in levels:
                    self.columns.append((f.name, lv))
                col += len(levels)
        self.d = col
        offsets = np.array(offsets, dtype=float)
        scales = np.array(scales, dtype=float)
        if offsets.shape != (self.d,) or scales.shape != (self.d,):
            raise DimensionMismatch(
                f"scaler parameter length {offsets.shape} does not match width {self.d}"
            )
        if np.any(scales == 0):
            raise SchemaError("scaler scales must be nonzero")
        self.offsets = offsets
        self.offsets.setflags(write=False)
        self.scales = scales
        self.scales.setflags(write=False)

    # -- encoding ---------------------------------------------------------

    def encode_row(self, row: dict) -> np.ndarray:
        """Encode one schema-conforming raw row into R^d."""
        out = np.zeros(self.d)
        for f in self.schema.features:
            if f.is_numeric:
                j = self.numeric_columns[f.name]
                try:
                    v = float(row[f.name])
                except (KeyError, TypeError, ValueError) as exc:
                    raise SchemaError(f"bad numeric value for {f.name!r}: {row.get(f.name)!r}") from exc
                out[j] = (v - self.offsets[j]) / self.scales[j]
            else:
                value = row.get(f.name, "")
                lo, _hi = self.group_spans[f.name]
                if value == "" and f.optional:
                    continue
                idx = self.level_index[f.name].get(str(value))
                if idx is None:
                    raise SchemaError(f"unknown level {value!r} for feature {f.name!r}")
                out[lo + idx] = 1.0
        return out

    def decode_point(self, point: np.ndarray) -> "DecodedRow":
        """Decode a point of R^d into an interpretable row.

        Pure one-hot blocks decode to their level name; fractional blocks
        decode to a level->weight mapping reported as-is, with the group
        flagged when the weights are not a valid (sub-)simplex.
        """
        point = np.asarray(point, dtype=float)
        if point.shape != (self.d,):
            raise DimensionMismatch(f"point has length {point.shape}, layout width is {self.d}")
        values: dict[str, object] = {}
        non_simplex: list[str] = []
        for f in self.schema.features:
            if f.is_numeric:
                j = self.numeric_columns[f.name]
                raw = point[j] * self.scales[j] + self.offsets[j]
                if f.kind == INTEGER and abs(raw - round(raw)) <= 1e-9:
                    raw = int(round(raw))
                values[f.name] = raw
            else:
                lo, hi = self.group_spans[f.name]
                block = point[lo:hi]
                levels = f.effective_levels()
                total = float(block.sum())
                ok_sum = abs(total - 1.0) <= 1e-9 or (f.optional and total <= 1e-9)
                in_range = bool(np.all(block >= -1e-9) and np.all(block <= 1 + 1e-9))
                pure = np.isclose(block, np.round(block), atol=1e-9).all() and ok_sum and in_range
                if pure:
                    hits = np.nonzero(np.round(block) == 1)[0]
                    values[f.name] = levels[hits[0]] if len(hits) else ""
                else:
                    values[f.name] = {
                        levels[i]: float(block[i]) for i in range(len(levels)) if abs(block[i]) > 1e-12
                    }
                    if not (ok_sum or abs(total - 1.0) <= 1e-6) or not in_range:
                        non_simplex.append(f.name)
        return DecodedRow(values=values, non_simplex_groups=tuple(non_simplex))

    # -- metadata ---------------------------------------------------------

    def column_labels(self) -> list[str]:
        return [name if lv is None else f"{name}={lv}" for name, lv in self.columns]

    def group_columns(self, group: str) -> np.ndarray:
        lo, hi = self.group_spans[group]
        return np.arange(lo, hi)

    def categorical_column_mask(self) -> np.ndarray:
        mask = np.zeros(self.d, dtype=bool)
        for lo, hi in self.group_spans.values():
            mask[lo:hi] = True
        return mask

    def unscale(self, points: np.ndarray) -> np.ndarray:
        """Map encoded coordinates back to raw units (one-hots unchanged)."""
        return np.asarray(points) * self.scales + self.offsets

    def to_json_dict(self) -> dict:
        return {
            "scaler_kind": self.scaler_kind,
            "offsets": self.offsets.tolist(),
            "scales": self.scales.tolist(),
            "schema": schema_to_dict(self.schema),
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "EncodingLayout":
        schema = schema_from_dict(data["schema"])
        return cls(schema, data["scaler_kind"],
                   np.asarray(data["offsets"]), np.asarray(data["scales"]))


@dataclass(frozen=True)
class DecodedRow:
    values: dict
    non_simplex_groups: tuple[str, ...] = ()

    @property
    def non_simplex(self) -> bool:
        return bool(self.non_simplex_groups)


def build_layout(schema: FeatureSchema, scaler_kind: str, training_rows: list[dict]) -> EncodingLayout:
    """Fit an encoding layout on training rows.

    Scaler parameters come from the training rows only. Zero-variance
    numeric columns get unit scale so encoding never divides by zero.
    """
    if scaler_kind not in _SCALERS:
        raise SchemaError(f"unknown scaler kind {scaler_kind!r}")
    if not training_rows:
        raise EmptyTrainingSet("cannot fit a layout on an empty training set")
    width = schema.encoded_width()
    offsets = np.zeros(width)
    scales = np.ones(width)
    probe = EncodingLayout(schema, NOSCALE, offsets, scales)
    for f in schema.numeric_features:
        j = probe.numeric_columns[f.name]
        try:
            vals = np.array([float(r[f.name]) for r in training_rows])
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"non-numeric training value in column {f.name!r}") from exc
        if scaler_kind == ZSCORE:
            offsets[j] = vals.mean()
            sd = vals.std()
            scales[j] = sd if sd > 0 else 1.0
        elif scaler_kind == MINMAX:
            offsets[j] = vals.min()
            span = vals.max() - vals.min()
            scales[j] = span if span > 0 else 1.0
    return EncodingLayout(schema, scaler_kind, offsets, scales)


# -- schema file I/O -------------------------------------------------------

def schema_to_dict(schema: FeatureSchema) -> dict:
    feats = []
    for f in schema.features:
        entry: dict = {"name": f.name, "kind": f.kind}
        if f.lower is not None:
            entry["lower"] = f.lower
        if f.upper is not None:
            entry["upper"] = f.upper
        if f.kind == CATEGORICAL:
            entry["levels"] = list(f.levels)
            entry["missing_policy"] = f.missing_policy
            if f.optional:
                entry["optional"] = True
        feats.append(entry)
    out = {"feature": feats}
    if schema.target_column:
        out["target_column"] = schema.target_column
    return out


def schema_from_dict(data: dict) -> FeatureSchema:
    feats = []
    for entry in data.get("feature", []):
        feats.append(FeatureDecl(
            name=entry["name"],
            kind=entry["kind"],
            lower=entry.get("lower"),
            upper=entry.get("upper"),
            levels=tuple(entry.get("levels", ())),
            missing_policy=entry.get("missing_policy", DROP_ROW),
            optional=bool(entry.get("optional", False)),
        ))
    return FeatureSchema(features=tuple(feats), target_column=data.get("target_column"))


def domain_from_dict(data: dict, schema: FeatureSchema) -> DomainSpec:
    spec = DomainSpec(
        modes=dict(data.get("modes", {})),
        enforce_bounds=bool(data.get("enforce_bounds", True)),
        path_groups=tuple(data["path_groups"]) if "path_groups" in data else None,
    )
    return spec.validate(schema)


def load_schema_file(path: str) -> tuple[FeatureSchema, DomainSpec, dict]:
    """Parse a TOML schema file into (schema, validated domain, extras).

    Extras currently carries ``na_token`` and anything under ``[loader]``.
    """
    try:
        with open(path, "rb") as fh:
            data = _toml.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"schema file not found: {path}")
    except _toml.TOMLDecodeError as exc:
        raise SchemaError(f"invalid TOML in {path}: {exc}")
    try:
        schema = schema_from_dict(data)
        domain = domain_from_dict(data.get("domain", {}), schema)
    except KeyError as exc:
        raise SchemaError(f"schema file {path} is missing key {exc}")
    extras = {
        "na_token": data.get("na_token", "?"),
        "loader": data.get("loader", {}),
    }
    return schema, domain, extras


def _toml_scalar(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    text = str(value).replace("\\", "\\\\").replace('"', '\\"')
    return f'"{text}"'


def dump_schema_file(schema: FeatureSchema, domain: DomainSpec | None = None,
                     na_token: str = "?") -> str:
    """Render a schema (and optional domain) as a TOML document."""
    buf = io.StringIO()
    if schema.target_column:
        buf.write(f"target_column = {_toml_scalar(schema.target_column)}\n")
    buf.write(f"na_token = {_toml_scalar(na_token)}\n")
    for f in schema.features:
        buf.write("\n[[feature]]\n")
        buf.write(f"name = {_toml_scalar(f.name)}\n")
        buf.write(f"kind = {_toml_scalar(f.kind)}\n")
        if f.lower is not None:
            buf.write(f"lower = {_toml_scalar(f.lower)}\n")
        if f.upper is not None:
            buf.write(f"upper = {_toml_scalar(f.upper)}\n")
        if f.kind == CATEGORICAL:
            levels = ", ".join(_toml_scalar(lv) for lv in f.levels)
            buf.write(f"levels = [{levels}]\n")
            if f.missing_policy != DROP_ROW:
                buf.write(f"missing_policy = {_toml_scalar(f.missing_policy)}\n")
            if f.optional:
                buf.write("optional = true\n")
    if domain is not None:
        buf.write("\n[domain]\n")
        buf.write(f"enforce_bounds = {_toml_scalar(domain.enforce_bounds)}\n")
        if domain.path_groups:
            groups = ", ".join(_toml_scalar(g) for g in domain.path_groups)
            buf.write(f"path_groups = [{groups}]\n")
        if domain.modes:
            buf.write("\n[domain.modes]\n")
            for name, mode in domain.modes.items():
                buf.write(f"{name} = {_toml_scalar(mode)}\n")
    return buf.getvalue()


def draft_schema(csv_path: str, na_token: str = "?", max_levels: int = 64,
                 delimiter: str = ",") -> FeatureSchema:
    """Draft a schema from a headered CSV for human review.

    Columns where every non-missing value parses as a number become numeric
    (integer when all values are integral); everything else with a bounded
    number of distinct values becomes categorical. The draft is a starting
    point, not a decision: review kinds, bounds, and the target column.
    """
    import csv as _csv

    with open(csv_path, newline="") as fh:
        reader = _csv.reader(fh, delimiter=delimiter)
        header = next(reader, None)
        if not header:
            raise EmptyTrainingSet(f"{csv_path} has no header row")
        header = [h.strip() for h in header]
        seen: dict[str, set] = {h: set() for h in header}
        numeric: dict[str, bool] = {h: True for h in header}
        integral: dict[str, bool] = {h: True for h in header}
        for row in reader:
            for h, cell in zip(header, row):
                cell = cell.strip()
                if cell == na_token or cell == "":
                    continue
                if len(seen[h]) <= max_levels:
                    seen[h].add(cell)
                try:
                    v = float(cell)
                    if not float(v).is_integer():
                        integral[h] = False
                except ValueError:
                    numeric[h] = False
    feats = []
    for h in header:
        if numeric[h] and seen[h]:
            feats.append(FeatureDecl(name=h, kind=INTEGER if integral[h] else CONTINUOUS))
        elif 2 <= len(seen[h]) <= max_levels:
            feats.append(FeatureDecl(name=h, kind=CATEGORICAL, levels=tuple(sorted(seen[h]))))
        # constant or over-wide columns are left out of the draft on purpose
    if not feats:
        raise SchemaError(f"could not draft any feature from {csv_path}")
    return FeatureSchema(features=tuple(feats))


def with_missing_policy(schema: FeatureSchema, policy: str) -> FeatureSchema:
    """Return a copy of the schema with every categorical set to ``policy``."""
    feats = tuple(
        replace(f, missing_policy=policy) if f.kind == CATEGORICAL else f
        for f in schema.features
    )
    return FeatureSchema(features=feats, target_column=schema.target_column)


def check_bounds(schema: FeatureSchema, row: dict) -> list[str]:
    """Names of numeric features whose value violates declared bounds."""
    bad = []
    for f in schema.numeric_features:
        if f.name not in row:
            continue
        try:
            v = float(row[f.name])
        except (TypeError, ValueError):
            continue
        if (f.lower is not None and v < f.lower) or (f.upper is not None and v > f.upper):
            bad.append(f.name)
    return bad
