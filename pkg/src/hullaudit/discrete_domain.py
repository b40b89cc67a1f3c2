"""Projection under discrete categorical constraints.

When a categorical group must stay pure one-hot, any admissible hull point
can only mix training rows that all share one level of that group: a
weighted average of one-hot blocks is itself one-hot exactly when every
positively-weighted row agrees. The mixed problem therefore decomposes
into one continuous projection per training-present profile of the
constrained groups, and the exact optimum is the best of those.

Enumeration visits profiles in ascending categorical-mismatch order. The
mismatch alone lower-bounds each profile's distance, so once it reaches
the incumbent the remaining profiles are pruned soundly.

A penalty-continuation route (``homotopy_project``) is kept as a heuristic
for domains whose profile count explodes: it relaxes the discrete blocks,
re-solves under growing integrality penalties, then certifies a rounded
profile with one fixed-profile continuous solve. Its distance can exceed
the exact optimum, never undercut it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import hull_solver as hs
from .errors import InfeasibleDomain, NonPureProfile
from .ingest import EncodedDataset, subprofile_of
from .schema import DISCRETE_EXCLUSIVE, FIXED_TO_QUERY, DomainSpec

DEFAULT_SCHEDULE = (0.0, 0.1, 1.0, 10.0, 100.0)


@dataclass(frozen=True)
class DiscreteSolveTrace:
    profiles_considered: int
    profiles_pruned: int
    winning_profile: dict | None
    method: str
    per_profile: tuple = ()
    notes: tuple[str, ...] = ()
    relaxed_distance: float | None = None
    rounding_gap_bound: float | None = None

    def to_json_dict(self) -> dict:
        return {
            "profiles_considered": self.profiles_considered,
            "profiles_pruned": self.profiles_pruned,
            "winning_profile": self.winning_profile,
            "method": self.method,
            "per_profile": [
                {"profile": p, "distance": d} for p, d in self.per_profile
            ],
            "notes": list(self.notes),
            "relaxed_distance": self.relaxed_distance,
            "rounding_gap_bound": self.rounding_gap_bound,
        }


def has_continuous_path(query: np.ndarray, dataset: EncodedDataset,
                        path_groups: tuple[str, ...]) -> bool:
    """True iff some training row matches the query on every path group.

    Pure profile bookkeeping: exact, and invariant under any rescaling of
    the numeric columns. An empty group list is vacuously true.
    """
    groups = tuple(path_groups)
    if not groups:
        return True
    key = subprofile_of(dataset.layout, query, groups)
    return dataset.rows_matching(groups, key).size > 0


def _profile_label(layout, groups: tuple[str, ...], key: tuple) -> dict:
    label = {}
    for g, lv in zip(groups, key):
        levels = layout.schema.feature(g).effective_levels()
        label[g] = None if lv is None else levels[lv]
    return label


def _group_mismatch_sq(layout, query: np.ndarray, group: str, level: int | None) -> float:
    lo, hi = layout.group_spans[group]
    block = query[lo:hi]
    sq = float(block @ block)
    if level is None:
        return sq
    return sq - 2.0 * float(block[level]) + 1.0


def _fixed_restriction(query: np.ndarray, dataset: EncodedDataset,
                       domain: DomainSpec) -> tuple[tuple[str, ...], tuple]:
    fixed = tuple(domain.fixed_groups)
    if not fixed:
        return (), ()
    key = subprofile_of(dataset.layout, query, fixed)
    return fixed, key


def project_with_discrete(query: np.ndarray, dataset: EncodedDataset,
                          domain: DomainSpec, config: hs.SolverConfig,
                          method: str = hs.METHOD_EXACT,
                          verbose_trace: bool = False, prune: bool = True):
    """Project under the domain's categorical constraints.

    ``exact`` enumerates training-present profiles of the constrained
    groups (global optimum); ``homotopy`` runs the penalty continuation.
    ``prune`` only affects work done, never the answer. Raises
    :class:`InfeasibleDomain` when no training row is admissible, e.g. a
    pinned profile that never occurs in training.
    """
    query = np.asarray(query, dtype=float)
    domain = domain.validate(dataset.layout.schema)
    if method == hs.METHOD_HOMOTOPY:
        return homotopy_project(query, dataset, domain, config=config)
    if method != hs.METHOD_EXACT:
        raise ValueError(f"unknown discrete method {method!r}")

    layout = dataset.layout
    fixed, fixed_key = _fixed_restriction(query, dataset, domain)
    discrete = tuple(domain.discrete_groups)

    if not discrete:
        rows = dataset.rows_matching(fixed, fixed_key)
        if rows.size == 0:
            raise InfeasibleDomain(
                f"no training row matches the pinned profile {_profile_label(layout, fixed, fixed_key)}"
            )
        positions = rows if fixed else None
        result = hs.project_continuous(hs.ProjectionProblem(query, dataset, positions, config))
        trace = DiscreteSolveTrace(1, 0, _profile_label(layout, fixed, fixed_key) or None,
                                   method=hs.METHOD_EXACT)
        return result, trace

    all_groups = fixed + discrete
    index = dataset.subprofile_index(all_groups)
    candidates = []
    for key, rows in index.items():
        if key[:len(fixed)] != fixed_key:
            continue
        disc_key = key[len(fixed):]
        mismatch = sum(
            _group_mismatch_sq(layout, query, g, lv) for g, lv in zip(discrete, disc_key)
        )
        candidates.append((mismatch, disc_key, rows))
    if not candidates:
        raise InfeasibleDomain(
            f"no training row matches the pinned profile {_profile_label(layout, fixed, fixed_key)}"
        )
    candidates.sort(key=lambda c: (c[0], c[1]))

    best = None
    best_key = None
    considered = 0
    per_profile = []
    for i, (mismatch, disc_key, rows) in enumerate(candidates):
        if prune and best is not None and mismatch >= best.distance ** 2:
            break
        considered += 1
        result = hs.project_continuous(hs.ProjectionProblem(query, dataset, rows, config))
        if verbose_trace:
            per_profile.append((_profile_label(layout, discrete, disc_key), result.distance))
        if best is None or result.distance < best.distance:
            best, best_key = result, disc_key
    pruned = len(candidates) - considered
    trace = DiscreteSolveTrace(
        profiles_considered=considered,
        profiles_pruned=pruned,
        winning_profile={**_profile_label(layout, fixed, fixed_key),
                         **_profile_label(layout, discrete, best_key)},
        method=hs.METHOD_EXACT,
        per_profile=tuple(per_profile),
    )
    return best, trace


# ---------------------------------------------------------------------------
# penalty continuation
# ---------------------------------------------------------------------------

def _penalized_stage(D: np.ndarray, x: np.ndarray, disc_cols: np.ndarray,
                     lam: float, alpha0: np.ndarray, max_iter: int = 500,
                     tol: float = 1e-10) -> tuple[np.ndarray, bool]:
    """Projected gradient on the integrality-penalized objective.

    Minimizes ``0.5||D^T a - x||^2 + lam * sum_c z_c (1 - z_c)`` over the
    simplex, ``z`` being the discrete coordinates of ``D^T a``. The penalty
    is concave, so steps use the exact piecewise-quadratic line minimum and
    fall back to the full step when curvature is nonpositive. Returns the
    final weights and whether the stage exhausted its iteration budget.
    """
    alpha = alpha0.copy()
    step = 1.0
    prev_alpha = prev_grad = None
    it = 0
    for it in range(1, max_iter + 1):
        z = D.T @ alpha
        r = z - x
        grad = D @ r + lam * (D[:, disc_cols] @ (1.0 - 2.0 * z[disc_cols]))
        if prev_alpha is not None:
            s = alpha - prev_alpha
            y = grad - prev_grad
            sy = float(s @ y)
            step = float(s @ s) / sy if sy > 1e-18 else 1.0
            step = min(max(step, 1e-12), 1e12)
        prev_alpha, prev_grad = alpha.copy(), grad
        trial = hs.project_to_simplex(alpha - step * grad)
        dvec = trial - alpha
        if float(np.abs(dvec).sum()) <= tol:
            break
        u = D.T @ dvec
        a = 0.5 * float(u @ u) - lam * float(u[disc_cols] @ u[disc_cols])
        b = float(r @ u) + lam * float(u[disc_cols] @ (1.0 - 2.0 * z[disc_cols]))
        if a > 0:
            theta = min(max(-b / (2.0 * a), 0.0), 1.0)
        else:
            theta = 1.0 if a + b < 0 else 0.0
        if theta <= 0:
            break
        alpha = alpha + theta * dvec
        alpha[alpha < 1e-15] = 0.0
        alpha = alpha / alpha.sum()
    return alpha, it >= max_iter


def homotopy_project(query: np.ndarray, dataset: EncodedDataset, domain: DomainSpec,
                     schedule: tuple[float, ...] = DEFAULT_SCHEDULE,
                     config: hs.SolverConfig | None = None):
    """Relax, penalize increasingly, round, then certify one fixed profile.

    The reported distance always comes from the final certified solve over
    the rounded profile's rows, so it upper-bounds the exact optimum.
    """
    config = config or hs.SolverConfig()
    query = np.asarray(query, dtype=float)
    domain = domain.validate(dataset.layout.schema)
    schedule = tuple(schedule)
    if not schedule or any(b < a for a, b in zip(schedule, schedule[1:])):
        raise ValueError("homotopy schedule must be a finite nondecreasing sequence")

    layout = dataset.layout
    fixed, fixed_key = _fixed_restriction(query, dataset, domain)
    rows = dataset.rows_matching(fixed, fixed_key)
    if rows.size == 0:
        raise InfeasibleDomain(
            f"no training row matches the pinned profile {_profile_label(layout, fixed, fixed_key)}"
        )
    positions = rows if fixed else None
    discrete = tuple(domain.discrete_groups)
    relaxed = hs.project_continuous(hs.ProjectionProblem(query, dataset, positions, config))
    if not discrete:
        trace = DiscreteSolveTrace(1, 0, _profile_label(layout, fixed, fixed_key) or None,
                                   method=hs.METHOD_HOMOTOPY,
                                   notes=("no discrete groups: identical to the relaxed solve",))
        return relaxed, trace

    D = dataset.matrix if positions is None else dataset.matrix[positions]
    disc_cols = np.concatenate([layout.group_columns(g) for g in discrete])
    alpha = np.zeros(D.shape[0])
    local = relaxed.support_positions if positions is None else _positions_to_local(positions, relaxed.support_positions)
    alpha[local] = relaxed.weights
    notes = []
    for lam in schedule:
        if lam == 0.0:
            continue
        alpha, exhausted = _penalized_stage(D, query, disc_cols, lam, alpha)
        if exhausted:
            notes.append(f"max_iter exceeded in penalty stage lambda={lam}")

    z = D.T @ alpha
    disc_key = []
    for g in discrete:
        lo, hi = layout.group_spans[g]
        block = z[lo:hi]
        decl = layout.schema.feature(g)
        if decl.optional and float(block.sum()) < 0.5:
            disc_key.append(None)
        else:
            disc_key.append(int(np.argmax(block)))
    disc_key = tuple(disc_key)

    all_groups = fixed + discrete
    index = dataset.subprofile_index(all_groups)
    full_key = fixed_key + disc_key
    if full_key not in index:
        # rounded profile unseen in training: certify the nearest seen one
        best_key, best_gap = None, np.inf
        for key in index:
            if key[:len(fixed)] != fixed_key:
                continue
            gap = sum(_group_mismatch_sq(layout, z, g, lv)
                      for g, lv in zip(discrete, key[len(fixed):]))
            if gap < best_gap:
                best_key, best_gap = key, gap
        if best_key is None:
            raise InfeasibleDomain(
                f"no training row matches the pinned profile {_profile_label(layout, fixed, fixed_key)}"
            )
        notes.append("rounded profile absent from training; certified nearest seen profile")
        full_key = best_key
        disc_key = best_key[len(fixed):]
    certified = hs.project_continuous(hs.ProjectionProblem(query, dataset, index[full_key], config))
    # the relaxed solve lower-bounds the exact optimum, so this gap bounds
    # whatever exact enumeration could still recover
    gap = max(certified.distance - relaxed.distance, 0.0)
    trace = DiscreteSolveTrace(
        profiles_considered=1,
        profiles_pruned=0,
        winning_profile={**_profile_label(layout, fixed, fixed_key),
                         **_profile_label(layout, discrete, disc_key)},
        method=hs.METHOD_HOMOTOPY,
        notes=tuple(notes) + (f"schedule={list(schedule)}",
                              "heuristic upper bound; exact enumeration may be tighter"),
        relaxed_distance=relaxed.distance,
        rounding_gap_bound=gap,
    )
    return certified, trace


def _positions_to_local(positions: np.ndarray, chosen: np.ndarray) -> np.ndarray:
    lookup = {int(p): i for i, p in enumerate(positions)}
    return np.asarray([lookup[int(c)] for c in chosen], dtype=np.int64)
