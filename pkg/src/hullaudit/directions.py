"""Analysis of the extrapolation directions stacked over outside samples.

Each row of the directions matrix points from an outside test sample to
its hull projection, in scaled space. The spectrum of that matrix exposes
systematic structure: numerical rank and conditioning, dominant singular
patterns, numerically redundant columns (via column-pivoted QR), and
cluster structure over the row directions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla

from .errors import DegenerateClustering, NoOutsideSamples
from .ingest import EncodedDataset

OUTSIDE_PATH = "outside_path"


@dataclass(frozen=True)
class DirectionsMatrix:
    matrix: np.ndarray          # m x d, row i = projection_i - query_i
    row_ids: np.ndarray         # test row ids, audit batch order
    column_labels: tuple[str, ...]

    @property
    def m(self) -> int:
        return self.matrix.shape[0]


@dataclass
class ClusteringReport:
    selected_k: int
    assignments: np.ndarray
    centroids: np.ndarray
    silhouette_by_k: dict[int, float]
    normalized: bool
    seed: int
    sampled_silhouette: bool = False

    def to_json_dict(self) -> dict:
        return {
            "selected_k": self.selected_k,
            "assignments": self.assignments.tolist(),
            "centroids": self.centroids.tolist(),
            "silhouette_by_k": {str(k): v for k, v in self.silhouette_by_k.items()},
            "normalized": self.normalized,
            "seed": self.seed,
            "sampled_silhouette": self.sampled_silhouette,
        }


@dataclass
class SpectrumReport:
    numerical_rank: int
    rank_tol: float
    condition_number: float
    singular_values: np.ndarray
    dominant_patterns: int
    energy_threshold: float
    dropped_columns: tuple[str, ...] = ()
    condition_number_after_drop: float | None = None
    redundant_candidates: list = field(default_factory=list)
    clustering: ClusteringReport | None = None

    def to_json_dict(self) -> dict:
        return {
            "numerical_rank": self.numerical_rank,
            "rank_tol": self.rank_tol,
            "condition_number": self.condition_number,
            "singular_values": self.singular_values.tolist(),
            "dominant_patterns": self.dominant_patterns,
            "energy_threshold": self.energy_threshold,
            "dropped_columns": list(self.dropped_columns),
            "condition_number_after_drop": self.condition_number_after_drop,
            "redundant_candidates": [
                {"column": c, "label": lab, "condition_number_after_drop": k}
                for c, lab, k in self.redundant_candidates
            ],
            "clustering": self.clustering.to_json_dict() if self.clustering else None,
        }


def build_directions(items, test: EncodedDataset,
                     statuses: list[str] | None = None) -> DirectionsMatrix:
    """Stack projection-minus-query rows for the outside-with-path samples.

    ``items`` is the batch output; ``statuses`` the per-row audit statuses
    (defaults to deriving outside-with-path from each item directly). Rows
    keep batch order. Raises :class:`NoOutsideSamples` when nothing
    qualifies.
    """
    rows = []
    ids = []
    for item in items:
        if item.result is None:
            continue
        if statuses is not None:
            if statuses[item.index] != OUTSIDE_PATH:
                continue
        elif item.result.status != "outside" or not item.has_path:
            continue
        rows.append(item.result.point - test.matrix[item.index])
        ids.append(test.row_ids[item.index])
    if not rows:
        raise NoOutsideSamples("no outside-with-path samples to build directions from")
    return DirectionsMatrix(
        matrix=np.vstack(rows),
        row_ids=np.asarray(ids),
        column_labels=tuple(test.layout.column_labels()),
    )


def _svals(M: np.ndarray) -> np.ndarray:
    return np.linalg.svd(M, compute_uv=False)


def _rank_and_cond(svals: np.ndarray, rank_tol: float | None, shape) -> tuple[int, float, float]:
    if rank_tol is None:
        rank_tol = max(shape) * np.finfo(float).eps
    cutoff = rank_tol * svals[0] if svals.size else 0.0
    rank = int(np.sum(svals > cutoff))
    cond = float(svals[0] / svals[rank - 1]) if rank > 0 else np.inf
    return rank, cond, rank_tol


def spectrum(directions: DirectionsMatrix, rank_tol: float | None = None,
             energy_threshold: float = 0.95,
             drop_columns: tuple[str, ...] = ()) -> SpectrumReport:
    """Full SVD report: rank at tolerance, kappa_2 = s_1/s_rank, patterns.

    Dominant patterns count the smallest leading prefix of singular values
    capturing ``energy_threshold`` of the total squared spectrum. When
    ``drop_columns`` is given, the condition number is also recomputed on
    the reduced matrix.
    """
    V = directions.matrix
    svals = _svals(V)
    rank, cond, tol = _rank_and_cond(svals, rank_tol, V.shape)
    energy = np.cumsum(svals ** 2)
    total = energy[-1] if energy.size else 0.0
    if total > 0:
        dominant = int(np.searchsorted(energy, energy_threshold * total) + 1)
    else:
        dominant = 0
    cond_after = None
    if drop_columns:
        keep = [i for i, lab in enumerate(directions.column_labels) if lab not in drop_columns]
        sub = _svals(V[:, keep])
        sub_rank, cond_after, _ = _rank_and_cond(sub, rank_tol, (V.shape[0], len(keep)))
    return SpectrumReport(
        numerical_rank=rank,
        rank_tol=tol,
        condition_number=cond,
        singular_values=svals,
        dominant_patterns=dominant,
        energy_threshold=energy_threshold,
        dropped_columns=tuple(drop_columns),
        condition_number_after_drop=cond_after,
    )


def redundant_features(directions: DirectionsMatrix, k: int = 1) -> list:
    """Rank columns by how little their removal reduces the column space.

    Trailing pivots of a column-pivoted QR factorization come first. Each
    candidate carries the condition number of the matrix without it, so the
    monotone drop in conditioning is visible directly.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    V = directions.matrix
    _q, _r, pivots = sla.qr(V, mode="economic", pivoting=True)
    trailing = pivots[::-1][:k]
    out = []
    for col in trailing:
        keep = [i for i in range(V.shape[1]) if i != col]
        svals = _svals(V[:, keep])
        _rank, cond, _ = _rank_and_cond(svals, None, (V.shape[0], len(keep)))
        out.append((int(col), directions.column_labels[int(col)], cond))
    return out


def cluster_directions(directions: DirectionsMatrix, k_range=range(2, 9),
                       seed: int = 42, normalize: bool = True,
                       silhouette_sample_cap: int = 4000) -> ClusteringReport:
    """K-means over (optionally row-normalized) directions, k by silhouette.

    Deterministic given the seed. Row normalization clusters by direction
    rather than magnitude. Silhouettes are computed on a seeded subsample
    past ``silhouette_sample_cap`` rows to stay quadratic-free.
    """
    from sklearn.cluster import KMeans
    from sklearn.metrics import silhouette_score

    V = directions.matrix
    m = V.shape[0]
    if m < 2:
        raise DegenerateClustering("need at least two direction rows to cluster")
    X = V.copy()
    if normalize:
        norms = np.linalg.norm(X, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        X = X / norms
    if np.allclose(X, X[0], atol=1e-12):
        raise DegenerateClustering("all direction rows are identical")

    # fit in canonical (lexicographic) row order so that permuting the input
    # permutes the assignments identically; seeded inits act on sorted rows
    order = np.lexsort(X.T[::-1])
    Xs = X[order]

    n_distinct = np.unique(np.round(Xs, 12), axis=0).shape[0]
    ks = [k for k in k_range if 2 <= k <= min(n_distinct, m - 1)]
    if not ks:
        # too few rows for any silhouette: two clusters of what there is
        k = min(2, n_distinct)
        km = KMeans(n_clusters=k, random_state=seed, n_init=10)
        sorted_labels = km.fit_predict(Xs)
        labels = np.empty(m, dtype=sorted_labels.dtype)
        labels[order] = sorted_labels
        return ClusteringReport(
            selected_k=k, assignments=labels, centroids=km.cluster_centers_,
            silhouette_by_k={}, normalized=normalize, seed=seed,
        )
    scores: dict[int, float] = {}
    fits = {}
    sampled = m > silhouette_sample_cap
    for k in ks:
        km = KMeans(n_clusters=k, random_state=seed, n_init=10)
        labels = km.fit_predict(Xs)
        if len(np.unique(labels)) < 2:
            continue
        kwargs = {}
        if sampled:
            kwargs = {"sample_size": silhouette_sample_cap, "random_state": seed}
        scores[k] = float(silhouette_score(Xs, labels, **kwargs))
        fits[k] = (labels, km.cluster_centers_)
    if not scores:
        raise DegenerateClustering("no k in range produced two distinct clusters")
    best_k = max(scores, key=lambda k: (scores[k], -k))
    sorted_labels, centers = fits[best_k]
    labels = np.empty(m, dtype=sorted_labels.dtype)
    labels[order] = sorted_labels
    return ClusteringReport(
        selected_k=best_k,
        assignments=labels,
        centroids=centers,
        silhouette_by_k=scores,
        normalized=normalize,
        seed=seed,
        sampled_silhouette=sampled,
    )


def analyze(directions: DirectionsMatrix, rank_tol: float | None = None,
            energy_threshold: float = 0.95, redundancy_k: int = 3,
            k_range=range(2, 9), seed: int = 42,
            normalize: bool = True) -> SpectrumReport:
    """Spectrum + redundancy + clustering in one report."""
    report = spectrum(directions, rank_tol=rank_tol, energy_threshold=energy_threshold)
    report.redundant_candidates = redundant_features(directions, k=redundancy_k)
    try:
        report.clustering = cluster_directions(
            directions, k_range=k_range, seed=seed, normalize=normalize)
    except DegenerateClustering:
        report.clustering = None
    return report
