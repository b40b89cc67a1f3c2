"""Exception hierarchy shared by the library, the CLI, and external bindings.

Every error carries a stable machine-readable ``code`` and the CLI exit
status associated with it, so out-of-process consumers can map failures
without parsing messages.
"""

from __future__ import annotations

EXIT_INFEASIBLE = 2
EXIT_CONFIG = 3
EXIT_PARSE = 4


class HullAuditError(Exception):
    """Base class for all hullaudit errors."""

    code = "error"
    exit_code = 1

    def to_json_dict(self) -> dict:
        return {"error": self.code, "message": str(self), "exit_code": self.exit_code}


class ConfigError(HullAuditError):
    code = "config_error"
    exit_code = EXIT_CONFIG


class SchemaError(ConfigError):
    code = "schema_error"


class SchemaMismatch(HullAuditError):
    """A column required by the schema is missing or ill-typed in the input."""

    code = "schema_mismatch"
    exit_code = EXIT_PARSE

    def __init__(self, column: str, message: str = ""):
        self.column = column
        super().__init__(message or f"column {column!r} does not match the schema")


class ParseError(HullAuditError):
    code = "parse_error"
    exit_code = EXIT_PARSE

    def __init__(self, line: int, message: str = ""):
        self.line = line
        super().__init__(message or f"cannot parse input at line {line}")


class EmptyTrainingSet(HullAuditError):
    code = "empty_training_set"
    exit_code = EXIT_CONFIG


class UnknownLevel(HullAuditError):
    """Raised only when unknown categorical values wiped out every row."""

    code = "unknown_level"
    exit_code = EXIT_CONFIG


class DimensionMismatch(HullAuditError):
    code = "dimension_mismatch"
    exit_code = EXIT_CONFIG


class NonPureProfile(HullAuditError):
    """An operation required pure one-hot categorical blocks."""

    code = "non_pure_profile"
    exit_code = EXIT_CONFIG


class InfeasibleDomain(HullAuditError):
    """No training row is admissible under the requested domain constraints."""

    code = "infeasible_domain"
    exit_code = EXIT_INFEASIBLE


class NumericBreakdown(HullAuditError):
    code = "numeric_breakdown"
    exit_code = 1


class NoOutsideSamples(HullAuditError):
    code = "no_outside_samples"
    exit_code = 1


class DegenerateClustering(HullAuditError):
    code = "degenerate_clustering"
    exit_code = 1
