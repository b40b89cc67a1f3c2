"""Projection of a query point onto the convex hull of training rows.

Solves ``min ||xh - x||`` over ``xh = sum_i a_i D_i`` with ``a >= 0`` and
``sum a = 1``. Three routes are provided behind one interface:

* ``gradient_projection`` (default): active-set gradient projection over
  the weights. Each iteration takes the feasible minimizer along the
  projected-gradient path (the Cauchy point), then optimizes exactly over
  the face spanned by the non-binding weights.
* ``frank_wolfe``: away-step Frank-Wolfe with periodic fully-corrective
  passes over the active vertex set; low memory, only matrix-vector
  products against the training matrix.
* ``dual``: a min-norm-point active-set method working on the Gram
  (inner-product) form of the problem, attractive when the number of rows
  vastly exceeds the dimension.

All three certify optimality with the same quantity: the maximum over
training rows of ``(x - xh) . (D_i - xh)``, which is nonpositive exactly at
the projection onto a convex set (checked here against ``tol_opt``).
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, DimensionMismatch, InfeasibleDomain, NonPureProfile, NumericBreakdown
from .ingest import EncodedDataset, profile_of
from .schema import DomainSpec

ALGO_GP = "gradient_projection"
ALGO_FW = "frank_wolfe"
ALGO_DUAL = "dual"
ALGO_AUTO = "auto"

METHOD_EXACT = "exact"
METHOD_HOMOTOPY = "homotopy"

STATUS_INSIDE = "inside"
STATUS_OUTSIDE = "outside"


@dataclass(frozen=True)
class SolverConfig:
    algorithm: str = ALGO_GP
    tol_opt: float = 1e-8
    tol_feas: float = 1e-10
    max_iter: int = 10_000
    membership_eps: float = 1e-6
    integer_repair: bool = False

    def __post_init__(self):
        if self.algorithm not in (ALGO_GP, ALGO_FW, ALGO_DUAL, ALGO_AUTO):
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")
        for name in ("tol_opt", "tol_feas", "membership_eps"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0")
        if self.max_iter < 1:
            raise ConfigError("max_iter must be >= 1")

    def to_json_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "tol_opt": self.tol_opt,
            "tol_feas": self.tol_feas,
            "max_iter": self.max_iter,
            "membership_eps": self.membership_eps,
            "integer_repair": self.integer_repair,
        }


@dataclass(frozen=True)
class ProjectionProblem:
    """A query against a (possibly restricted) view of a training dataset."""

    query: np.ndarray
    dataset: EncodedDataset
    row_positions: np.ndarray | None = None
    config: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        q = np.ascontiguousarray(self.query, dtype=np.float64)
        if q.shape != (self.dataset.d,):
            raise DimensionMismatch(
                f"query length {q.shape} does not match dataset width {self.dataset.d}"
            )
        if not np.all(np.isfinite(q)):
            raise NumericBreakdown("query contains non-finite values")
        object.__setattr__(self, "query", q)
        if self.row_positions is not None:
            pos = np.asarray(self.row_positions, dtype=np.int64)
            if pos.size == 0:
                raise InfeasibleDomain("projection problem has an empty row subset")
            object.__setattr__(self, "row_positions", pos)

    def matrix_view(self) -> np.ndarray:
        if self.row_positions is None:
            return self.dataset.matrix
        return self.dataset.matrix[self.row_positions]

    def global_positions(self, local: np.ndarray) -> np.ndarray:
        if self.row_positions is None:
            return np.asarray(local, dtype=np.int64)
        return self.row_positions[np.asarray(local, dtype=np.int64)]


@dataclass(frozen=True)
class ProjectionResult:
    """Certified projection onto the admitted hull.

    ``support_positions`` index into the full dataset; ``weights`` are the
    matching nonnegative hull weights (zero rows omitted). ``certificate``
    is the recomputed variational-inequality residual over the admitted
    rows, and ``certified`` reports whether it met ``tol_opt``.
    """

    point: np.ndarray
    support_positions: np.ndarray
    weights: np.ndarray
    distance: float
    raw_distance: float
    status: str
    iterations: int
    certificate: float
    certified: bool
    algorithm: str
    n_rows: int
    alpha_unique: bool
    warnings: tuple[str, ...] = ()

    def support_row_ids(self, dataset: EncodedDataset) -> np.ndarray:
        return dataset.row_ids[self.support_positions]


@dataclass(frozen=True)
class KktReport:
    passes: bool
    certificate: float
    weight_sum_gap: float
    min_weight: float
    reconstruction_error: float
    violations: tuple[str, ...]


# ---------------------------------------------------------------------------
# numeric kernels (operate on a dense row-subset matrix)
# ---------------------------------------------------------------------------

def project_to_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    v = np.asarray(v, dtype=np.float64)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ks = np.arange(1, v.size + 1)
    cond = u - css / ks > 0
    rho = np.nonzero(cond)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def _affine_weights(rows: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Minimize ``||rows^T b - x||`` subject to ``sum b = 1`` (sign-free)."""
    k = rows.shape[0]
    if k == 1:
        return np.ones(1)
    base = rows[0]
    span = rows[1:] - base
    gamma, *_ = np.linalg.lstsq(span.T, x - base, rcond=None)
    return np.concatenate(([1.0 - gamma.sum()], gamma))


def _face_optimize(D: np.ndarray, x: np.ndarray, idx: np.ndarray,
                   w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Exact simplex-constrained optimum over (a face of) the given support.

    Alternates the affine minimizer with a feasibility line search, dropping
    vertices that hit zero; terminates in at most ``len(idx)`` passes.
    """
    idx = np.asarray(idx, dtype=np.int64).copy()
    w = np.asarray(w, dtype=np.float64).copy()
    for _ in range(idx.size + 2):
        beta = _affine_weights(D[idx], x)
        if beta.min() >= -1e-12:
            w = np.maximum(beta, 0.0)
            w /= w.sum()
            break
        mask = beta < 0
        ratios = w[mask] / (w[mask] - beta[mask])
        t = float(np.min(ratios))
        w = w + t * (beta - w)
        w[w < 1e-15] = 0.0
        keep = w > 0
        if not np.any(keep):
            keep = np.zeros_like(w, dtype=bool)
            keep[int(np.argmax(beta))] = True
            w[keep] = 1.0
        idx, w = idx[keep], w[keep]
        w = w / w.sum()
        if idx.size == 1:
            w = np.ones(1)
            break
    return idx, w


def _certificate(D: np.ndarray, x: np.ndarray, xh: np.ndarray) -> float:
    u = x - xh
    return float(np.max(D @ u) - xh @ u)


def _stop_ok(cert: float, dist2: float, cfg: SolverConfig) -> bool:
    # The certificate bounds the squared-distance suboptimality, so the
    # distance error is roughly cert / dist. Near-zero distances therefore
    # demand a certificate small relative to the distance itself before the
    # membership call (and cross-algorithm distances) can be trusted.
    if cert > cfg.tol_opt:
        return False
    if dist2 <= (0.5 * cfg.membership_eps) ** 2:
        return True
    return cert <= min(1e-2 * dist2, 1e-7 * np.sqrt(dist2))


def _nearest_row(D: np.ndarray, x: np.ndarray) -> int:
    sq = np.einsum("ij,ij->i", D, D) - 2.0 * (D @ x)
    return int(np.argmin(sq))


def _solve_gp(D: np.ndarray, x: np.ndarray, cfg: SolverConfig,
              warm_idx: np.ndarray | None = None,
              warm_w: np.ndarray | None = None):
    m = D.shape[0]
    face_cap = max(2 * (D.shape[1] + 2), 64)
    alpha = np.zeros(m)
    if warm_idx is not None and warm_idx.size:
        alpha[warm_idx] = warm_w / warm_w.sum()
    else:
        alpha[_nearest_row(D, x)] = 1.0

    best = (np.inf, alpha.copy(), np.inf)
    prev_alpha = prev_g = None
    it = 0
    for it in range(1, cfg.max_iter + 1):
        r = D.T @ alpha - x
        g = D @ r
        dist2 = float(r @ r)
        if not np.isfinite(dist2):
            raise NumericBreakdown("projection objective became non-finite")
        cert = float(np.max(-g) + (r + x) @ r)
        if dist2 < best[0]:
            best = (dist2, alpha.copy(), cert)
        if _stop_ok(cert, dist2, cfg):
            # return exactly the iterate this certificate was computed for
            sup = np.nonzero(alpha > 0)[0]
            return sup, alpha[sup], it, cert

        if prev_alpha is None:
            Dg = D.T @ g
            denom = float(Dg @ Dg)
            step = float(g @ g) / denom if denom > 0 else 1.0
        else:
            s = alpha - prev_alpha
            y = g - prev_g
            sy = float(s @ y)
            step = float(s @ s) / sy if sy > 1e-18 else 1.0
        step = min(max(step, 1e-12), 1e12)
        prev_alpha, prev_g = alpha.copy(), g

        trial = project_to_simplex(alpha - step * g)
        dvec = trial - alpha
        Dd = D.T @ dvec
        denom = float(Dd @ Dd)
        slope = float(r @ Dd)
        if denom > 0:
            theta = min(max(-slope / denom, 0.0), 1.0)
        else:
            theta = 0.0
        cauchy = alpha + theta * dvec
        cauchy[cauchy < 1e-15] = 0.0
        total = cauchy.sum()
        if total <= 0:
            cauchy = alpha
        else:
            cauchy /= total

        support = np.nonzero(cauchy > 0)[0]
        if 0 < support.size <= face_cap:
            idx, w = _face_optimize(D, x, support, cauchy[support])
            alpha = np.zeros(m)
            alpha[idx] = w
        else:
            alpha = cauchy

    # iteration budget exhausted: best objective seen, with its own certificate
    it = cfg.max_iter
    r = D.T @ alpha - x
    final = (float(r @ r), alpha, _certificate(D, x, r + x))
    if final[0] < best[0]:
        best = final
    _, alpha, cert = best
    sup = np.nonzero(alpha > 0)[0]
    return sup, alpha[sup], it, cert


def _solve_fw(D: np.ndarray, x: np.ndarray, cfg: SolverConfig):
    m = D.shape[0]
    idx = np.array([_nearest_row(D, x)], dtype=np.int64)
    w = np.ones(1)
    best = (np.inf, idx, w, np.inf)
    corrective_every = 64
    for it in range(1, cfg.max_iter + 1):
        xh = D[idx].T @ w
        r = xh - x
        g = D @ r
        dist2 = float(r @ r)
        if not np.isfinite(dist2):
            raise NumericBreakdown("projection objective became non-finite")
        cert = float(np.max(-g) + xh @ r)
        if dist2 < best[0]:
            best = (dist2, idx.copy(), w.copy(), cert)
        if _stop_ok(cert, dist2, cfg):
            return idx, w, it, cert
        if it % corrective_every == 0:
            idx, w = _face_optimize(D, x, idx, w)
            continue

        g_active = g[idx]
        mix = float(w @ g_active)
        s = int(np.argmin(g))
        away_local = int(np.argmax(g_active))
        gap_fw = mix - float(g[s])
        gap_away = float(g_active[away_local]) - mix
        if gap_fw >= gap_away:
            direction = D[s] - xh
            theta_max = 1.0
            toward = s
        else:
            direction = xh - D[idx[away_local]]
            wa = w[away_local]
            theta_max = wa / (1.0 - wa) if wa < 1.0 else 0.0
            toward = -1
        denom = float(direction @ direction)
        if denom <= 0:
            idx, w = _face_optimize(D, x, idx, w)
            continue
        theta = min(max(-float(r @ direction) / denom, 0.0), theta_max)
        if theta <= 0:
            idx, w = _face_optimize(D, x, idx, w)
            continue
        if toward >= 0:
            w = w * (1.0 - theta)
            where = np.nonzero(idx == toward)[0]
            if where.size:
                w[where[0]] += theta
            else:
                idx = np.append(idx, toward)
                w = np.append(w, theta)
        else:
            w = w * (1.0 + theta)
            w[away_local] -= theta
        keep = w > 1e-15
        idx, w = idx[keep], w[keep]
        w = w / w.sum()

    # iteration budget exhausted: best objective seen, with its own certificate
    _, idx, w, cert = best
    return idx, w, cfg.max_iter, cert


def _bordered_gram_solve(G: np.ndarray) -> np.ndarray:
    """Affine min-norm weights from the Gram matrix of shifted support rows."""
    k = G.shape[0]
    K = np.zeros((k + 1, k + 1))
    K[:k, :k] = G
    K[:k, k] = 1.0
    K[k, :k] = 1.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    try:
        sol = np.linalg.solve(K, rhs)
    except np.linalg.LinAlgError:
        sol, *_ = np.linalg.lstsq(K, rhs, rcond=None)
    return sol[:k]


def _solve_dual(D: np.ndarray, x: np.ndarray, cfg: SolverConfig):
    """Min-norm-point active set over the shifted rows, in Gram form."""
    m = D.shape[0]
    Dx = D @ x
    xx = float(x @ x)
    start = _nearest_row(D, x)
    S = [start]
    v = np.ones(1)
    G = np.array([[float(D[start] @ D[start]) - 2.0 * Dx[start] + xx]])
    cert = np.inf
    it = 0
    for it in range(1, cfg.max_iter + 1):
        p = D[S].T @ v - x
        dist2 = float(p @ p)
        t = D @ p
        cert = dist2 - (float(np.min(t)) - float(x @ p))
        if _stop_ok(cert, dist2, cfg):
            break
        q = int(np.argmin(t))
        if q in S:
            break  # no improving vertex representable at this precision
        cross = D[S] @ D[q] - Dx[np.asarray(S)] - Dx[q] + xx
        qq = float(D[q] @ D[q]) - 2.0 * Dx[q] + xx
        G = np.block([[G, cross[:, None]], [cross[None, :], np.array([[qq]])]])
        S.append(q)
        v = np.append(v, 0.0)
        for _ in range(len(S) + 2):
            u = _bordered_gram_solve(G)
            if u.min() > 1e-12:
                v = u
                break
            mask = u <= 1e-12
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = v[mask] / (v[mask] - u[mask])
            ratios = ratios[np.isfinite(ratios)]
            theta = float(np.min(ratios)) if ratios.size else 0.0
            v = v + theta * (u - v)
            v[v < 1e-12] = 0.0
            keep = v > 0
            if not np.any(keep):
                keep = np.zeros_like(keep)
                keep[int(np.argmax(u))] = True
                v = np.zeros_like(v)
                v[keep] = 1.0
            S = [s for s, k in zip(S, keep) if k]
            G = G[np.ix_(keep, keep)]
            v = v[keep]
            v = v / v.sum()
            if len(S) == 1:
                break
    else:
        it = cfg.max_iter

    idx = np.asarray(S, dtype=np.int64)
    cert = _certificate(D, x, D[idx].T @ v)
    return idx, v, it, cert


_KERNELS = {ALGO_GP: _solve_gp, ALGO_FW: _solve_fw, ALGO_DUAL: _solve_dual}


def _pick_algorithm(cfg: SolverConfig, m: int, d: int) -> str:
    if cfg.algorithm != ALGO_AUTO:
        return cfg.algorithm
    # the Gram-form route pays off when rows dwarf the dimension
    return ALGO_DUAL if m >= 32 * max(d, 1) and m >= 4096 else ALGO_GP


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def project_continuous(problem: ProjectionProblem,
                       warm_positions: np.ndarray | None = None,
                       warm_weights: np.ndarray | None = None) -> ProjectionResult:
    """Project the query onto the convex hull of the admitted rows.

    Deterministic for a fixed configuration. On iteration exhaustion the
    best iterate is returned with ``certified=False`` and a warning rather
    than raising.
    """
    D = problem.matrix_view()
    x = problem.query
    cfg = problem.config
    if not np.all(np.isfinite(D)):
        raise NumericBreakdown("training matrix contains non-finite values")
    algo = _pick_algorithm(cfg, D.shape[0], D.shape[1])
    kernel = _KERNELS[algo]
    if algo == ALGO_GP and warm_positions is not None:
        local = _to_local(problem, warm_positions)
        idx, w, iterations, cert = kernel(D, x, cfg, warm_idx=local, warm_w=np.asarray(warm_weights))
    else:
        idx, w, iterations, cert = kernel(D, x, cfg)
    result = _finish(problem, algo, idx, w, iterations, cert)
    if cfg.integer_repair:
        result = _integer_repair(result, problem, kernel)
    return result


def _integer_repair(result: ProjectionResult, problem: ProjectionProblem, kernel) -> ProjectionResult:
    """Round integer coordinates of the projection and re-project the point.

    Heuristic: the repaired point stays on the admitted hull but is no
    longer the variational optimum for the original query, so the
    certificate is recomputed honestly and may exceed tolerance.
    """
    layout = problem.dataset.layout
    from .schema import INTEGER

    int_cols = np.asarray([
        layout.numeric_columns[f.name]
        for f in layout.schema.features if f.kind == INTEGER
    ], dtype=np.int64)
    if int_cols.size == 0:
        return result
    raw = layout.unscale(result.point)
    rounded = raw.copy()
    rounded[int_cols] = np.round(raw[int_cols])
    if np.allclose(rounded, raw, atol=1e-12):
        return result
    target = (rounded - layout.offsets) / layout.scales
    D = problem.matrix_view()
    idx, w, iterations, _ = kernel(D, target, problem.config)
    repaired = _finish(problem, result.algorithm, idx, w,
                       result.iterations + iterations,
                       _certificate(D, problem.query, D[idx].T @ w))
    return replace(
        repaired,
        status=result.status,
        warnings=repaired.warnings + (
            "integer_repair: integer coordinates rounded and re-projected; "
            "point is feasible but not the variational optimum",
        ),
    )


def _to_local(problem: ProjectionProblem, positions: np.ndarray) -> np.ndarray:
    if problem.row_positions is None:
        return np.asarray(positions, dtype=np.int64)
    lookup = {int(p): i for i, p in enumerate(problem.row_positions)}
    local = [lookup[int(p)] for p in positions if int(p) in lookup]
    return np.asarray(local, dtype=np.int64)


def _finish(problem: ProjectionProblem, algo: str, idx: np.ndarray, w: np.ndarray,
            iterations: int, cert: float) -> ProjectionResult:
    D = problem.matrix_view()
    cfg = problem.config
    layout = problem.dataset.layout
    order = np.argsort(-w)
    idx, w = idx[order], np.maximum(w[order], 0.0)
    w = w / w.sum()
    xh = D[idx].T @ w
    delta = xh - problem.query
    distance = float(np.linalg.norm(delta))
    raw_distance = float(np.linalg.norm(delta * layout.scales))
    certified = cert <= cfg.tol_opt
    warnings = ()
    if iterations >= cfg.max_iter and not certified:
        warnings = ("max_iter_exceeded: best iterate returned without certification",)
    status = STATUS_INSIDE if distance <= cfg.membership_eps else STATUS_OUTSIDE
    return ProjectionResult(
        point=xh,
        support_positions=problem.global_positions(idx),
        weights=w,
        distance=distance,
        raw_distance=raw_distance,
        status=status,
        iterations=iterations,
        certificate=float(cert),
        certified=certified,
        algorithm=algo,
        n_rows=D.shape[0],
        alpha_unique=_support_unique(D, idx),
        warnings=warnings,
    )


def _support_unique(D: np.ndarray, idx: np.ndarray) -> bool:
    k = idx.size
    if k <= 1:
        return True
    if k > D.shape[1] + 1:
        return False
    span = D[idx[1:]] - D[idx[0]]
    return int(np.linalg.matrix_rank(span, tol=1e-10)) == k - 1


def verify_kkt(result: ProjectionResult, problem: ProjectionProblem) -> KktReport:
    """Recompute every optimality and feasibility check from scratch."""
    cfg = problem.config
    D = problem.matrix_view()
    local = _to_local(problem, result.support_positions)
    violations = []
    if local.size != result.support_positions.size:
        violations.append("support rows are not all admissible for this problem")
    w = np.asarray(result.weights, dtype=float)
    min_w = float(w.min()) if w.size else 0.0
    if min_w < -cfg.tol_feas:
        violations.append(f"negative weight {min_w:.3e}")
    gap = abs(float(w.sum()) - 1.0)
    if gap > cfg.tol_feas:
        violations.append(f"weights sum to 1{gap:+.3e}")
    recon = float(np.linalg.norm(D[local].T @ w - result.point)) if not violations else np.inf
    if recon > 1e-10:
        violations.append(f"point is not the weighted combination of its support ({recon:.3e})")
    cert = _certificate(D, problem.query, np.asarray(result.point, dtype=float))
    if cert > cfg.tol_opt:
        violations.append(f"variational inequality residual {cert:.3e} exceeds tol_opt")
    return KktReport(
        passes=not violations,
        certificate=cert,
        weight_sum_gap=gap,
        min_weight=min_w,
        reconstruction_error=recon,
        violations=tuple(violations),
    )


# ---------------------------------------------------------------------------
# batch driver
# ---------------------------------------------------------------------------

@dataclass
class BatchItem:
    """Per-row outcome of a batch audit; errors never abort the batch."""

    index: int
    result: ProjectionResult | None = None
    error: str | None = None
    error_message: str | None = None
    has_path: bool = True
    used_profile_fallback: bool = False


def project_one(query: np.ndarray, train: EncodedDataset, domain: DomainSpec,
                config: SolverConfig, method: str = METHOD_EXACT,
                no_path_fallback: bool = True) -> tuple[ProjectionResult, bool, bool]:
    """Route one query through the domain-aware projection.

    Returns (result, has_path, used_profile_fallback). Queries whose exact
    categorical profile already admits a zero-distance combination are
    resolved on that restricted set; such a point is optimal for every
    domain mode, so the shortcut never changes an answer. With
    ``no_path_fallback`` a pinned profile absent from training re-solves
    with those groups free to switch levels; without it the
    :class:`InfeasibleDomain` propagates.
    """
    from . import discrete_domain as dd

    layout = train.layout
    path_groups = tuple(domain.path_groups or ())
    has_path = dd.has_continuous_path(query, train, path_groups) if path_groups else True

    cat_groups = tuple(f.name for f in layout.schema.categorical_features)
    if cat_groups:
        try:
            full = profile_of(layout, query)
            same = train.rows_matching(cat_groups, full)
        except NonPureProfile:
            same = np.empty(0, dtype=np.int64)
        if same.size:
            shortcut = project_continuous(ProjectionProblem(query, train, same, config))
            if shortcut.status == STATUS_INSIDE:
                return shortcut, has_path, False

    needs_discrete = bool(domain.fixed_groups or domain.discrete_groups)
    if needs_discrete:
        try:
            result, _trace = dd.project_with_discrete(query, train, domain, config, method=method)
            return result, has_path, False
        except InfeasibleDomain:
            if not no_path_fallback:
                raise
            # pinned profile absent from training: re-solve letting those
            # groups switch to the nearest training-present pure levels
            from .schema import DISCRETE_EXCLUSIVE, FIXED_TO_QUERY

            modes = {g: DISCRETE_EXCLUSIVE if m == FIXED_TO_QUERY else m
                     for g, m in domain.modes.items()}
            fallback = replace(domain, modes=modes).validate(layout.schema)
            result, _trace = dd.project_with_discrete(query, train, fallback, config, method=method)
            return result, has_path, True
    result = project_continuous(ProjectionProblem(query, train, None, config))
    return result, has_path, False


_WORKER_STATE: dict = {}


def _batch_init(train, test_matrix, domain, config, method):
    _WORKER_STATE["args"] = (train, test_matrix, domain, config, method)


def _batch_chunk(indices: list[int]) -> list[BatchItem]:
    train, test_matrix, domain, config, method = _WORKER_STATE["args"]
    out = []
    for i in indices:
        item = BatchItem(index=i)
        try:
            result, has_path, fb = project_one(test_matrix[i], train, domain, config, method)
            item.result = result
            item.has_path = has_path
            item.used_profile_fallback = fb
        except Exception as exc:  # per-row failures are data, not crashes
            item.error = getattr(exc, "code", exc.__class__.__name__)
            item.error_message = str(exc)
            if isinstance(exc, InfeasibleDomain):
                item.has_path = False
        out.append(item)
    return out


def batch_project(train: EncodedDataset, test: EncodedDataset, domain: DomainSpec,
                  config: SolverConfig | None = None, method: str = METHOD_EXACT,
                  threads: int | None = None) -> list[BatchItem]:
    """Project every test row, order-preserving and deterministic.

    Identical encoded queries are solved once and fanned back out. Worker
    count comes from ``threads`` or ``HULLAUDIT_THREADS``; scheduling cannot
    change any numeric output because each solve is a pure function of its
    inputs.
    """
    config = config or SolverConfig()
    if train.layout.d != test.layout.d:
        raise DimensionMismatch("train and test datasets use different layouts")
    domain = domain.validate(train.layout.schema)
    if threads is None:
        threads = int(os.environ.get("HULLAUDIT_THREADS", "1"))
    threads = max(1, threads)

    uniq, inverse = np.unique(test.matrix, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).reshape(-1)
    order = list(range(uniq.shape[0]))
    _batch_init(train, uniq, domain, config, method)
    if threads == 1 or uniq.shape[0] < 4:
        solved = _batch_chunk(order)
    else:
        import multiprocessing as mp

        chunks = [order[i::threads * 4] for i in range(threads * 4)]
        chunks = [c for c in chunks if c]
        # fork inherits the staged datasets; never re-pickle the matrices
        ctx = mp.get_context("fork")
        with ProcessPoolExecutor(max_workers=threads, mp_context=ctx) as pool:
            parts = list(pool.map(_batch_chunk, chunks))
        solved = [item for part in parts for item in part]
        solved.sort(key=lambda it: it.index)

    items = []
    for row, uidx in enumerate(inverse):
        src = solved[int(uidx)]
        items.append(BatchItem(
            index=row,
            result=src.result,
            error=src.error,
            error_message=src.error_message,
            has_path=src.has_path,
            used_profile_fallback=src.used_profile_fallback,
        ))
    return items
