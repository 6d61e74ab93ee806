"""Fixed-effects panel estimation with cluster-robust standard errors.

High-dimensional fixed effects are absorbed by iterated demeaning
(alternating projections over the group dimensions) rather than
materializing dummy columns; coefficients on the remaining regressors are
identical to explicit-dummy least squares. The covariance is the CR1
cluster sandwich,

    V = c * (X'X)^-1 (sum_g s_g s_g') (X'X)^-1,   s_g = X_g' e_g,
    c = G/(G-1) * (N-1)/(N-K),

computed on the demeaned data, with K counting slopes plus the degrees of
freedom used by the absorbed effects. 95% intervals are estimate +- 1.96*se.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field

import numpy as np

DEMEAN_TOL = 1e-10
MAX_SWEEPS = 10_000
Z95 = 1.96


class EstimationError(Exception):
    pass


class SingleClusterError(EstimationError):
    pass


class CollinearityError(EstimationError):
    def __init__(self, columns):
        super().__init__("collinear after absorbing fixed effects: "
                         + ", ".join(columns))
        self.columns = list(columns)


class ConvergenceError(EstimationError):
    pass


@dataclass
class AbsorbedDim:
    name: str
    n_levels: int


@dataclass
class RegressionResult:
    coefficients: dict[str, float]
    se: dict[str, float]
    ci95: dict[str, tuple[float, float]]
    clustered_cov: np.ndarray
    n_obs: int
    n_clusters: int
    absorbed_dims: list[AbsorbedDim] = field(default_factory=list)
    absorbed_dof: int = 0
    sweeps: int = 0
    final_delta: float = 0.0

    def tstat(self, name: str) -> float:
        s = self.se[name]
        return self.coefficients[name] / s if s > 0 else float("inf")


def _factorize(values) -> tuple[np.ndarray, int]:
    arr = np.asarray(values)
    _, codes = np.unique(arr, return_inverse=True)
    return codes.astype(np.int64), int(codes.max()) + 1 if codes.size else 0


def demean_by_groups(matrix: np.ndarray, group_codes: list[np.ndarray],
                     group_sizes: list[int], tol: float = DEMEAN_TOL,
                     max_sweeps: int = MAX_SWEEPS) -> tuple[np.ndarray, int, float]:
    """Subtract group means for each dimension until the sweep is a no-op."""
    z = matrix.astype(np.float64, copy=True)
    if not group_codes:
        return z, 0, 0.0
    counts = [np.bincount(codes, minlength=size).astype(np.float64)[:, None]
              for codes, size in zip(group_codes, group_sizes)]
    delta = np.inf
    for sweep in range(1, max_sweeps + 1):
        delta = 0.0
        for codes, size, cnt in zip(group_codes, group_sizes, counts):
            sums = np.zeros((size, z.shape[1]))
            np.add.at(sums, codes, z)
            means = sums / cnt
            adjust = means[codes]
            z -= adjust
            step = float(np.max(np.abs(adjust))) if adjust.size else 0.0
            delta = max(delta, step)
        if delta < tol:
            return z, sweep, delta
        if len(group_codes) == 1 and sweep >= 1:
            # a single dimension projects exactly in one pass
            return z, sweep, 0.0
    raise ConvergenceError(
        f"demeaning did not converge after {max_sweeps} sweeps "
        f"(last max adjustment {delta:.3e})")


def _absorbed_dof(group_codes: list[np.ndarray], group_sizes: list[int]) -> int:
    """Rank of the absorbed dummy design (with intercept).

    Exact for one or two dimensions (union-find over the bipartite level
    graph); higher dimensions use the standard levels-minus-one surplus
    approximation for each extra dimension.
    """
    if not group_codes:
        return 0
    if len(group_codes) == 1:
        return group_sizes[0]
    l1, l2 = group_sizes[0], group_sizes[1]
    parent = list(range(l1 + l2))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in zip(group_codes[0], group_codes[1]):
        ra, rb = find(int(a)), find(int(b) + l1)
        if ra != rb:
            parent[rb] = ra
    components = len({find(i) for i in range(l1 + l2)})
    dof = l1 + l2 - components
    for size in group_sizes[2:]:
        dof += size - 1
    return dof


def fe_regression(y, X, x_names: list[str], absorb: list, absorb_names: list[str],
                  cluster, tol: float = DEMEAN_TOL,
                  max_sweeps: int = MAX_SWEEPS) -> RegressionResult:
    """Absorbed-fixed-effects OLS with cluster-robust (CR1) covariance.

    ``absorb`` holds one label array per absorbed dimension; ``cluster``
    labels the clustering dimension. Raises SingleClusterError without at
    least two clusters and CollinearityError when a regressor is absorbed
    away or the demeaned design is rank deficient.
    """
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    n, k = X.shape
    if y.shape[0] != n:
        raise ValueError("y and X row counts differ")
    if len(x_names) != k:
        raise ValueError("x_names does not match X columns")

    cluster_codes, n_clusters = _factorize(cluster)
    if n_clusters < 2:
        raise SingleClusterError(
            f"need at least 2 clusters, got {n_clusters}")

    group_codes = []
    group_sizes = []
    for dim in absorb:
        codes, size = _factorize(dim)
        group_codes.append(codes)
        group_sizes.append(size)

    stacked = np.column_stack([y, X])
    demeaned, sweeps, final_delta = demean_by_groups(
        stacked, group_codes, group_sizes, tol, max_sweeps)
    y_t = demeaned[:, 0]
    X_t = demeaned[:, 1:]

    # regressors fully soaked up by the fixed effects
    orig_scale = np.sqrt(np.mean(X ** 2, axis=0))
    demeaned_scale = np.sqrt(np.mean(X_t ** 2, axis=0))
    dead = demeaned_scale <= 1e-8 * np.maximum(orig_scale, 1.0)
    if np.any(dead):
        raise CollinearityError([x_names[j] for j in np.flatnonzero(dead)])

    xtx = X_t.T @ X_t
    cond_rank = np.linalg.matrix_rank(xtx, tol=1e-10 * float(np.trace(xtx)))
    if cond_rank < k:
        raise CollinearityError(_deficient_columns(X_t, x_names))

    beta = np.linalg.solve(xtx, X_t.T @ y_t)
    resid = y_t - X_t @ beta

    absorbed_dof = _absorbed_dof(group_codes, group_sizes)
    K = k + absorbed_dof
    if n <= K:
        raise EstimationError(f"{n} observations cannot support {K} parameters")

    scores = np.zeros((n_clusters, k))
    np.add.at(scores, cluster_codes, X_t * resid[:, None])
    meat = scores.T @ scores
    bread = np.linalg.inv(xtx)
    c = (n_clusters / (n_clusters - 1)) * ((n - 1) / (n - K))
    cov = c * bread @ meat @ bread
    cov = (cov + cov.T) / 2.0

    se = np.sqrt(np.maximum(np.diag(cov), 0.0))
    coefficients = dict(zip(x_names, beta.tolist()))
    se_map = dict(zip(x_names, se.tolist()))
    ci = {name: (coefficients[name] - Z95 * se_map[name],
                 coefficients[name] + Z95 * se_map[name]) for name in x_names}
    return RegressionResult(
        coefficients=coefficients, se=se_map, ci95=ci, clustered_cov=cov,
        n_obs=n, n_clusters=n_clusters,
        absorbed_dims=[AbsorbedDim(name, size)
                       for name, size in zip(absorb_names, group_sizes)],
        absorbed_dof=absorbed_dof, sweeps=sweeps, final_delta=final_delta)


def _deficient_columns(X_t: np.ndarray, names: list[str]) -> list[str]:
    """Greedy pass naming columns that break full rank."""
    kept: list[int] = []
    bad: list[str] = []
    for j in range(X_t.shape[1]):
        cols = kept + [j]
        sub = X_t[:, cols]
        if np.linalg.matrix_rank(sub.T @ sub) < len(cols):
            bad.append(names[j])
        else:
            kept.append(j)
    return bad or list(names)


@dataclass
class PanelObservation:
    player_id: str
    period_id: str
    value: float
    n_underlying: int


def aggregate_player_period(rows, period: str = "year") -> list[PanelObservation]:
    """Median of values per (player, period) cell.

    ``rows`` yields (player_id, date, value) with ``date`` a datetime.date.
    Even-sized cells take the midpoint of the two central values. Empty
    cells never appear (there is nothing to emit for them).
    """
    if period not in ("year", "month"):
        raise ValueError(f"period must be year or month, got {period!r}")
    cells: dict[tuple[str, str], list[float]] = {}
    for player_id, date, value in rows:
        pid = f"{date.year:04d}" if period == "year" else f"{date.year:04d}-{date.month:02d}"
        cells.setdefault((player_id, pid), []).append(float(value))
    out = [PanelObservation(player_id=player, period_id=per,
                            value=float(statistics.median(values)),
                            n_underlying=len(values))
           for (player, per), values in cells.items()]
    out.sort(key=lambda o: (o.player_id, o.period_id))
    return out


@dataclass
class TrendPoint:
    period_id: str
    effect: float
    ci_low: float
    ci_high: float


def trend_series(panel: list[PanelObservation],
                 baseline_period: str | None = None) -> list[TrendPoint]:
    """Per-period effects relative to a baseline, player effects absorbed.

    Period dummies (baseline omitted) are regressed on the panel values with
    player fixed effects absorbed and errors clustered at the player; the
    baseline row is emitted with a zero effect and zero-width interval.
    """
    if not panel:
        raise ValueError("empty panel")
    periods = sorted({o.period_id for o in panel})
    baseline = baseline_period if baseline_period is not None else periods[0]
    if baseline not in periods:
        raise ValueError(f"baseline period {baseline!r} not present")
    others = [p for p in periods if p != baseline]
    if not others:
        return [TrendPoint(baseline, 0.0, 0.0, 0.0)]

    y = np.array([o.value for o in panel])
    period_idx = {p: j for j, p in enumerate(others)}
    X = np.zeros((len(panel), len(others)))
    for i, o in enumerate(panel):
        j = period_idx.get(o.period_id)
        if j is not None:
            X[i, j] = 1.0
    players = [o.player_id for o in panel]
    result = fe_regression(y, X, others, [players], ["player"], players)

    points = [TrendPoint(baseline, 0.0, 0.0, 0.0)]
    for p in others:
        lo, hi = result.ci95[p]
        points.append(TrendPoint(p, result.coefficients[p], lo, hi))
    points.sort(key=lambda t: t.period_id)
    return points


def table1_model(obs, model: int) -> RegressionResult:
    """The two move-level interaction models.

    ``obs`` is a mapping of column arrays: dqi, after_ai, novelty_dummy,
    player_id, month_id, move_number. Model 1 regresses quality on the
    after-AI dummy, the novelty dummy, and their interaction, absorbing
    move-number and player effects. Model 2 drops the after-AI dummy and
    additionally absorbs month effects (the dummy would be collinear with
    them). Errors cluster at the player.
    """
    y = np.asarray(obs["dqi"], dtype=np.float64)
    after = np.asarray(obs["after_ai"], dtype=np.float64)
    nov = np.asarray(obs["novelty_dummy"], dtype=np.float64)
    inter = after * nov
    players = np.asarray(obs["player_id"])
    move_numbers = np.asarray(obs["move_number"])
    if model == 1:
        X = np.column_stack([after, nov, inter])
        names = ["after_ai", "novelty_dummy", "after_ai_x_novelty"]
        absorb = [move_numbers, players]
        absorb_names = ["move_number", "player"]
    elif model == 2:
        months = np.asarray(obs["month_id"])
        X = np.column_stack([nov, inter])
        names = ["novelty_dummy", "after_ai_x_novelty"]
        absorb = [months, move_numbers, players]
        absorb_names = ["month", "move_number", "player"]
    else:
        raise ValueError(f"model must be 1 or 2, got {model}")
    return fe_regression(y, X, names, absorb, absorb_names, players)


def significance_stars(estimate: float, se: float) -> str:
    """Two-sided normal stars: *** p<.001, ** p<.01, * p<.05."""
    if se <= 0:
        return "***" if estimate != 0 else ""
    z = abs(estimate) / se
    if z > 3.2905:
        return "***"
    if z > 2.5758:
        return "**"
    if z > 1.9600:
        return "*"
    return ""
