"""hullaudit: does a model interpolate or extrapolate for each query?

Projects query points onto the convex hull of a training set intersected
with a declared mixed categorical/continuous domain, and reports the
geometry of extrapolation: distances, per-feature deltas, and dominant
directions.
"""

from .discrete_domain import (
    DiscreteSolveTrace,
    has_continuous_path,
    homotopy_project,
    project_with_discrete,
)
from .directions import (
    DirectionsMatrix,
    SpectrumReport,
    analyze,
    build_directions,
    cluster_directions,
    redundant_features,
    spectrum,
)
from .errors import HullAuditError, InfeasibleDomain
from .hull_solver import (
    BatchItem,
    ProjectionProblem,
    ProjectionResult,
    SolverConfig,
    batch_project,
    project_continuous,
    project_one,
    verify_kkt,
)
from .ingest import EncodedDataset, IngestStats, LoadOptions, load_dataset, profile_of
from .report import AuditSummary, SampleRecord, build_records, explain_sample, summarize
from .schema import (
    DomainSpec,
    EncodingLayout,
    FeatureDecl,
    FeatureSchema,
    build_layout,
    draft_schema,
    dump_schema_file,
    load_schema_file,
)

__version__ = "0.1.0"

__all__ = [
    "AuditSummary",
    "BatchItem",
    "DirectionsMatrix",
    "DiscreteSolveTrace",
    "DomainSpec",
    "EncodedDataset",
    "EncodingLayout",
    "FeatureDecl",
    "FeatureSchema",
    "HullAuditError",
    "InfeasibleDomain",
    "IngestStats",
    "LoadOptions",
    "ProjectionProblem",
    "ProjectionResult",
    "SampleRecord",
    "SolverConfig",
    "SpectrumReport",
    "analyze",
    "batch_project",
    "build_directions",
    "build_layout",
    "build_records",
    "cluster_directions",
    "draft_schema",
    "dump_schema_file",
    "explain_sample",
    "has_continuous_path",
    "homotopy_project",
    "load_dataset",
    "load_schema_file",
    "profile_of",
    "project_continuous",
    "project_one",
    "project_with_discrete",
    "redundant_features",
    "spectrum",
    "summarize",
    "verify_kkt",
]
