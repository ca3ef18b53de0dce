"""Generic numerical engines: LP feasibility, L1 regression, hinge descent.

Three solvers, all deterministic and dependency-free beyond numpy:

* ``lp_feasible``   -- certified feasibility for systems a.v >= b via a
  phase-1 dense-tableau simplex with Bland's anti-cycling rule.
* ``l1_fit``        -- least-absolute-deviations regression through the LP
  dual, solved by a bounded-variable revised simplex (same Bland pivoting),
  with a strong-duality certificate on the recovered coefficients.
* ``minimize_hinge`` -- projected subgradient descent for the scaled hinge
  loss over a cone-cap constraint set.

Each invocation is single-threaded and shares no mutable state, so distinct
calls may run concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import ConeCap, project_cone_cap

PIVOT_TOL = 1e-9
FEASIBILITY_SLACK = 1e-7
L1_OBJECTIVE_TOL = 1e-6

# Pivot selection: Dantzig pricing until a run of this many degenerate
# pivots, then Bland's rule (the anti-cycling guarantee) until progress.
_BLAND_AFTER = 40


class NumericalBreakdown(RuntimeError):
    """Simplex pivoting stalled or a certified answer could not be recovered."""


@dataclass(frozen=True, eq=False)
class LinearConstraintSystem:
    """Inequality system a_i . v >= b_i over free v in R^dim."""

    A: np.ndarray  # (m, dim)
    b: np.ndarray  # (m,)

    def __post_init__(self):
        A = np.ascontiguousarray(self.A, dtype=float)
        b = np.ascontiguousarray(self.b, dtype=float)
        if A.ndim != 2 or b.ndim != 1 or A.shape[0] != b.size:
            raise ValueError("constraint matrix/right-hand side shapes disagree")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ValueError("constraint system must be finite")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @classmethod
    def from_rows(cls, rows) -> "LinearConstraintSystem":
        A = np.asarray([np.asarray(a, dtype=float) for a, _ in rows])
        b = np.asarray([float(rhs) for _, rhs in rows])
        return cls(A, b)

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def dim(self) -> int:
        return self.A.shape[1]


@dataclass(frozen=True, eq=False)
class HingeProblem:
    """Scaled hinge loss max{0, 1 - y(v.x)/tau} averaged over samples, over K."""

    X: np.ndarray  # (n, d)
    y: np.ndarray  # (n,) in {-1, +1}
    tau: float
    cone: ConeCap

    def __post_init__(self):
        X = np.ascontiguousarray(self.X, dtype=float)
        y = np.ascontiguousarray(self.y, dtype=float)
        if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.size:
            raise ValueError("sample matrix/label shapes disagree")
        if self.tau <= 0.0:
            raise ValueError("hinge scale tau must be positive")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)


def lp_feasible(system: LinearConstraintSystem):
    """Return v satisfying every row with slack >= -1e-7, or None if infeasible.

    Phase-1 simplex on the slack-minimization problem
    ``min t  s.t.  A v + t >= b, t >= 0`` with a dense tableau and Bland's
    rule; the optimal t certifies the answer either way (t is the least
    achievable worst violation). Raises NumericalBreakdown if pivoting
    exceeds 10 (m + dim)^2 iterations.
    """
    if system.m == 0:
        raise ValueError("constraint system has no rows")
    A, b = system.A, system.b
    m, d = system.m, system.dim

    worst = int(np.argmax(b))
    if b[worst] <= FEASIBILITY_SLACK:
        return np.zeros(d)

    # Standard form: A v+ - A v- - s + 1 t = b with all variables >= 0.
    # Column order: v+ (d), v- (d), s (m), t (1). Initial basis: s on every
    # row except ``worst``, where the uniform-violation variable t enters.
    ncols = 2 * d + m + 1
    t_col = 2 * d + m
    tableau = np.zeros((m + 1, ncols + 1))
    tableau[:m, :d] = A
    tableau[:m, d : 2 * d] = -A
    tableau[:m, 2 * d : 2 * d + m] = -np.eye(m)
    tableau[:m, t_col] = 1.0
    tableau[:m, ncols] = b

    # Establish the starting basis by elimination: subtract the ``worst`` row
    # from the others (clearing t's column), then flip signs so the basic
    # slack columns read +1. Right-hand sides become b[worst] - b[i] >= 0.
    mask = np.ones(m, dtype=bool)
    mask[worst] = False
    tableau[:m][mask] -= tableau[worst]
    tableau[:m][mask] *= -1.0

    basis = np.array([2 * d + i for i in range(m)], dtype=int)
    basis[worst] = t_col

    # Reduced-cost row for objective min t: subtract the row that carries t.
    tableau[m, t_col] = 1.0
    tableau[m] -= tableau[worst]

    max_iter = 10 * (m + d) ** 2
    degenerate_streak = 0
    for _ in range(max_iter):
        objective = -tableau[m, ncols]
        if objective <= 1e-9:
            break  # already feasible at the current basic point
        costs = tableau[m, :ncols]
        eligible = costs < -PIVOT_TOL
        if not eligible.any():
            break  # phase-1 optimum reached
        if degenerate_streak >= _BLAND_AFTER:
            enter = int(np.argmax(eligible))  # Bland: lowest eligible index
        else:
            enter = int(np.argmin(costs))  # Dantzig: steepest reduced cost

        col = tableau[:m, enter]
        rows = col > PIVOT_TOL
        if not rows.any():
            raise NumericalBreakdown("phase-1 column unbounded; tableau corrupt")
        ratios = np.full(m, np.inf)
        ratios[rows] = tableau[:m, ncols][rows] / col[rows]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + 1e-12)
        leave = ties[int(np.argmin(basis[ties]))]  # Bland on variable index
        degenerate_streak = 0 if best > 1e-12 else degenerate_streak + 1

        pivot = tableau[leave, enter]
        tableau[leave] /= pivot
        column = tableau[:, enter].copy()
        column[leave] = 0.0
        tableau -= np.outer(column, tableau[leave])
        basis[leave] = enter
    else:
        raise NumericalBreakdown("phase-1 simplex exceeded its iteration budget")

    objective = -tableau[m, ncols]
    values = tableau[:m, ncols]
    if objective > FEASIBILITY_SLACK:
        return None

    v = np.zeros(d)
    for row, var in enumerate(basis):
        if var < d:
            v[var] += values[row]
        elif var < 2 * d:
            v[var - d] -= values[row]
    return v


def _weighted_median(values: np.ndarray, weights: np.ndarray) -> float:
    """Lower weighted median: smallest v with cumulative weight >= half."""
    order = np.argsort(values, kind="stable")
    csum = np.cumsum(weights[order])
    idx = int(np.searchsorted(csum, 0.5 * csum[-1]))
    return float(values[order][min(idx, values.size - 1)])


def _coordinate_descent_l1(features, targets, coef, sweeps=50, tol=1e-12):
    """Exact per-coordinate L1 polish via weighted medians."""
    coef = coef.copy()
    residual = targets - features @ coef
    for _ in range(sweeps):
        moved = 0.0
        for j in range(features.shape[1]):
            col = features[:, j]
            live = np.abs(col) > 1e-12
            if not live.any():
                continue
            ratios = (residual[live] + col[live] * coef[j]) / col[live]
            new = _weighted_median(ratios, np.abs(col[live]))
            delta = new - coef[j]
            if abs(delta) > tol:
                residual -= col * delta
                coef[j] = new
                moved = max(moved, abs(delta))
        if moved <= tol:
            break
    return coef


class _BoundedSimplex:
    """Revised simplex for min c.x s.t. A x = b, l <= x <= u (few rows).

    Bland's rule on both entering and leaving choices; basic values are
    re-solved from the basis every iteration, which keeps accumulated
    round-off out of the ratio tests at negligible cost for small row
    counts.
    """

    def __init__(self, c, A, b, lower, upper, max_iter):
        self.c = c
        self.A = A
        self.b = b
        self.lower = lower
        self.upper = upper
        self.max_iter = max_iter
        self.n = A.shape[1]
        self.p = A.shape[0]

    def solve(self, basis, status):
        # status: 0 at lower bound, 1 at upper bound, 2 basic
        c, A, b = self.c, self.A, self.b
        lower, upper = self.lower, self.upper
        basis = np.array(basis, dtype=int)
        status = np.array(status, dtype=int)
        fixed = upper - lower <= 1e-15
        degenerate_streak = 0

        for _ in range(self.max_iter):
            x = np.where(status == 1, upper, lower)
            x[basis] = 0.0
            B = A[:, basis]
            try:
                x_basic = np.linalg.solve(B, b - A @ x)
                pi = np.linalg.solve(B.T, c[basis])
            except np.linalg.LinAlgError as exc:
                raise NumericalBreakdown("singular simplex basis") from exc
            x[basis] = x_basic

            reduced = c - A.T @ pi
            eligible = (
                ((status == 0) & (reduced < -PIVOT_TOL))
                | ((status == 1) & (reduced > PIVOT_TOL))
            ) & ~fixed
            if not eligible.any():
                return x, float(c @ x), basis, status
            if degenerate_streak >= _BLAND_AFTER:
                enter = int(np.argmax(eligible))  # Bland
            else:
                scores = np.where(eligible, np.abs(reduced), -np.inf)
                enter = int(np.argmax(scores))  # Dantzig

            direction = np.linalg.solve(B, A[:, enter])
            if status[enter] == 1:  # entering decreases from its upper bound
                direction = -direction

            # Basic variables move by -t * direction; each blocks at a bound.
            t_block = np.full(self.p, np.inf)
            pos = direction > PIVOT_TOL
            neg = direction < -PIVOT_TOL
            t_block[pos] = (x_basic[pos] - lower[basis][pos]) / direction[pos]
            t_block[neg] = (x_basic[neg] - upper[basis][neg]) / direction[neg]
            t_enter = upper[enter] - lower[enter]

            t_star = min(float(t_block.min()), float(t_enter))
            if not np.isfinite(t_star):
                raise NumericalBreakdown("bounded simplex direction unbounded")
            t_star = max(t_star, 0.0)
            degenerate_streak = 0 if t_star > 1e-12 else degenerate_streak + 1

            blockers = np.flatnonzero(t_block <= t_star + 1e-12)
            candidates = [int(basis[i]) for i in blockers]
            if t_enter <= t_star + 1e-12:
                candidates.append(enter)
            choice = min(candidates)  # Bland: lowest variable index

            if choice == enter and t_enter <= t_star + 1e-12:
                status[enter] = 1 - status[enter]  # bound flip
                continue
            row = int(blockers[int(np.argmin(basis[blockers]))])
            leaving = int(basis[row])
            hit_lower = direction[row] > 0.0
            status[leaving] = 0 if hit_lower else 1
            basis[row] = enter
            status[enter] = 2
        raise NumericalBreakdown("bounded simplex exceeded its iteration budget")


def l1_fit(features, targets) -> np.ndarray:
    """Coefficients minimizing (1/n) sum |features @ c - targets|.

    Solves the least-absolute-deviations LP through its dual
    ``max y.lam  s.t.  features.T lam = 0, -1 <= lam <= 1`` with a
    bounded-variable simplex, recovers c from the rows the optimal dual
    basis interpolates, and certifies the result against the dual objective
    (strong duality) within 1e-6. A coordinate-descent polish covers
    degenerate bases; failure to certify raises NumericalBreakdown.
    """
    features = np.ascontiguousarray(features, dtype=float)
    targets = np.ascontiguousarray(targets, dtype=float)
    if features.ndim != 2:
        raise ValueError("feature matrix must be 2-D")
    n, p = features.shape
    if n < 1 or p < 1 or targets.shape != (n,):
        raise ValueError("need n >= 1 samples and p >= 1 features")

    scale = max(1.0, float(np.abs(targets).sum()))
    max_iter = max(10_000, 20 * (n + p))

    # Dual columns: lambda_1..lambda_n in [-1, 1], then p artificials that
    # absorb the residual of the starting bound pattern. Phase 1 drives the
    # artificials to zero; phase 2 pins them there and optimizes -y.lam.
    # The start puts lambda_i at the bound matching the sign of the
    # least-squares residual, which is close to the optimal sign pattern.
    lsq_coef, *_ = np.linalg.lstsq(features, targets, rcond=None)
    lam0 = np.where(targets - features @ lsq_coef >= 0.0, 1, 0)
    residual0 = -features.T @ np.where(lam0 == 1, 1.0, -1.0)
    signs = np.where(residual0 >= 0.0, 1.0, -1.0)
    A = np.hstack([features.T, np.diag(signs)])
    lower = np.concatenate([-np.ones(n), np.zeros(p)])
    basis = np.arange(n, n + p)
    status = np.concatenate([lam0, np.full(p, 2)]).astype(int)

    phase1 = _BoundedSimplex(
        np.concatenate([np.zeros(n), np.ones(p)]),
        A,
        np.zeros(p),
        lower,
        np.concatenate([np.ones(n), np.full(p, np.inf)]),
        max_iter,
    )
    _, infeasibility, basis, status = phase1.solve(basis, status)
    if infeasibility > 1e-7 * scale:
        raise NumericalBreakdown(f"dual phase 1 stalled at {infeasibility:.3e}")

    phase2 = _BoundedSimplex(
        np.concatenate([-targets, np.zeros(p)]),
        A,
        np.zeros(p),
        lower,
        np.concatenate([np.ones(n), np.zeros(p)]),
        max_iter,
    )
    lam, neg_dual, _, status = phase2.solve(basis, status)
    dual_objective = -neg_dual

    interpolated = np.flatnonzero((status[:n] == 2) & (np.abs(lam[:n]) < 1.0 - 1e-9))
    if interpolated.size:
        coef, *_ = np.linalg.lstsq(features[interpolated], targets[interpolated], rcond=None)
    else:
        coef = np.zeros(p)

    gap = float(np.abs(features @ coef - targets).sum()) - dual_objective
    if gap > 0.5 * L1_OBJECTIVE_TOL * n:
        coef = _coordinate_descent_l1(features, targets, coef)
        gap = float(np.abs(features @ coef - targets).sum()) - dual_objective
    if gap > L1_OBJECTIVE_TOL * n + 1e-9 * scale:
        raise NumericalBreakdown(
            f"L1 duality gap {gap / n:.3e} exceeds tolerance {L1_OBJECTIVE_TOL:.0e}"
        )
    return coef


def hinge_objective(v, X, y, tau) -> float:
    """Average scaled hinge loss (1/n) sum max{0, 1 - y(v.x)/tau}."""
    margins = y * (X @ v) / tau
    return float(np.mean(np.maximum(0.0, 1.0 - margins)))


def minimize_hinge(problem: HingeProblem, iters: int, seed=None) -> np.ndarray:
    """Approximate argmin of the average hinge loss over the cone cap.

    Projected subgradient descent started at the cone axis with step size
    1/(G sqrt(t)) where G is the empirical max of ||x||/tau, averaging the
    iterates of the second half. Returns whichever of the projected average
    or the best iterate seen has the smaller objective, which makes the
    achieved objective monotone under doubled iteration budgets. The method
    is deterministic; ``seed`` is accepted for interface uniformity.
    """
    del seed
    if problem.X.shape[0] == 0:
        raise ValueError("hinge problem needs at least one sample")
    if iters < 1:
        raise ValueError("need at least one iteration")
    X, y, tau, cone = problem.X, problem.y, problem.tau, problem.cone

    norms = np.linalg.norm(X, axis=1)
    grad_bound = max(float(norms.max()) / tau, 1e-12)
    v = cone.axis.w.copy()
    best = v
    best_obj = hinge_objective(v, X, y, tau)
    tail_sum = np.zeros_like(v)
    tail_count = 0
    tail_start = iters // 2 + 1

    for t in range(1, iters + 1):
        margins = y * (X @ v) / tau
        active = margins < 1.0
        if active.any():
            grad = -(y[active, None] * X[active]).sum(axis=0) / (tau * X.shape[0])
        else:
            grad = np.zeros_like(v)
        step = 1.0 / (grad_bound * np.sqrt(t))
        v = project_cone_cap(v - step * grad, cone)
        obj = hinge_objective(v, X, y, tau)
        if obj < best_obj:
            best_obj = obj
            best = v
        if t >= tail_start:
            tail_sum += v
            tail_count += 1

    averaged = project_cone_cap(tail_sum / max(tail_count, 1), cone)
    avg_obj = hinge_objective(averaged, X, y, tau)
    return averaged if avg_obj <= best_obj else best
