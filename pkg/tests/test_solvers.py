import numpy as np
import pytest

from noisyhalfspaces.geometry import ConeCap, Hyperplane, normalize
from noisyhalfspaces.solvers import (
    FEASIBILITY_SLACK,
    HingeProblem,
    LinearConstraintSystem,
    hinge_objective,
    l1_fit,
    lp_feasible,
    minimize_hinge,
)
from conftest import hinge_grid_oracle, l1_objective, l1_oracle_objective


def test_lp_interval():
    system = LinearConstraintSystem(np.array([[1.0], [-1.0]]), np.array([1.0, -2.0]))
    v = lp_feasible(system)
    assert v is not None and 1.0 - 1e-7 <= v[0] <= 2.0 + 1e-7


def test_lp_infeasible_interval():
    system = LinearConstraintSystem(np.array([[1.0], [-1.0]]), np.array([1.0, 0.0]))
    assert lp_feasible(system) is None


def test_lp_from_rows_constructor():
    system = LinearConstraintSystem.from_rows([(np.array([1.0, 0.0]), 1.0)])
    assert system.m == 1 and system.dim == 2


def test_lp_separable_points():
    X = np.array([[2.0, 0.0], [-1.0, 1.0], [0.5, -2.0]])
    y = np.array([1.0, -1.0, -1.0])
    rows = y[:, None] * X
    v = lp_feasible(LinearConstraintSystem(rows, np.ones(3)))
    assert v is not None
    assert np.all(rows @ v >= 1.0 - 1e-7)


def test_lp_soundness_on_random_feasible_systems():
    rng = np.random.default_rng(17)
    for _ in range(1000):
        m, d = int(rng.integers(1, 9)), int(rng.integers(1, 5))
        A = rng.standard_normal((m, d))
        target = rng.standard_normal(d)
        b = A @ target - rng.uniform(0.0, 1.0, size=m)
        v = lp_feasible(LinearConstraintSystem(A, b))
        assert v is not None, "planted-feasible system reported infeasible"
        assert np.all(A @ v - b >= -FEASIBILITY_SLACK)


def test_lp_completeness_margin_one_certificates():
    rng = np.random.default_rng(19)
    for _ in range(100):
        d = int(rng.integers(2, 6))
        w = rng.standard_normal(d)
        X = rng.standard_normal((40, d))
        margins = X @ w
        keep = np.abs(margins) > 1e-3
        X, margins = X[keep], margins[keep]
        y = np.sign(margins)
        scale = 1.0 / np.min(np.abs(margins))
        rows = y[:, None] * X
        assert np.all(rows @ (w * scale) >= 1.0 - 1e-9)  # planted certificate
        assert lp_feasible(LinearConstraintSystem(rows, np.ones(len(y)))) is not None


def test_l1_interpolates_square_systems():
    rng = np.random.default_rng(23)
    for _ in range(20):
        p = int(rng.integers(1, 5))
        F = rng.standard_normal((p, p)) + np.eye(p) * 0.5
        t = rng.standard_normal(p)
        coef = l1_fit(F, t)
        assert l1_objective(F, t, coef) <= 1e-8


def test_l1_constant_feature_is_median():
    coef = l1_fit(np.ones((3, 1)), np.array([1.0, 2.0, 10.0]))
    assert coef[0] == pytest.approx(2.0, abs=1e-9)


def test_l1_random_instance_vs_oracle():
    rng = np.random.default_rng(29)
    F = rng.standard_normal((20, 3))
    t = rng.standard_normal(20)
    assert l1_objective(F, t, l1_fit(F, t)) <= l1_oracle_objective(F, t) + 1e-4


def test_l1_oracle_certificate_100_instances():
    rng = np.random.default_rng(31)
    for _ in range(100):
        n, p = int(rng.integers(2, 31)), int(rng.integers(1, 5))
        F = rng.standard_normal((n, p))
        t = rng.standard_normal(n)
        assert l1_objective(F, t, l1_fit(F, t)) <= l1_oracle_objective(F, t) + 1e-4


def test_l1_rejects_bad_shapes():
    with pytest.raises(ValueError):
        l1_fit(np.ones((3, 1)), np.ones(2))


def axis_cone(half_angle=np.pi / 4):
    return ConeCap(Hyperplane(np.array([1.0, 0.0])), half_angle)


def test_hinge_zero_loss_at_axis():
    X = np.array([[2.0, 0.0], [1.5, 0.3], [1.2, -0.2]])
    y = np.ones(3)
    v = minimize_hinge(HingeProblem(X, y, 1.0, axis_cone()), 200)
    assert hinge_objective(v, X, y, 1.0) <= 1e-3


def test_hinge_singleton_cone_returns_axis():
    rng = np.random.default_rng(37)
    X = rng.standard_normal((20, 2))
    y = np.sign(rng.standard_normal(20))
    v = minimize_hinge(HingeProblem(X, y, 0.5, axis_cone(1e-7)), 50)
    assert np.linalg.norm(v - np.array([1.0, 0.0])) <= 1e-6


def test_hinge_single_sample_matches_grid_direction():
    X = np.array([[0.9, 0.45]])
    y = np.array([1.0])
    cone = axis_cone(np.pi / 2)
    v = minimize_hinge(HingeProblem(X, y, 1.0, cone), 3000)
    _, best = hinge_grid_oracle(X, y, 1.0, np.array([1.0, 0.0]), np.pi / 2)
    v_dir = v / np.linalg.norm(v)
    b_dir = best / np.linalg.norm(best)
    assert np.arccos(np.clip(v_dir @ b_dir, -1, 1)) <= 0.02


def test_hinge_objective_matches_grid_oracle_100_instances():
    rng = np.random.default_rng(41)
    for _ in range(100):
        n = int(rng.integers(1, 25))
        X = rng.standard_normal((n, 2))
        y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
        tau = float(rng.uniform(0.2, 1.5))
        half = float(rng.uniform(0.2, np.pi / 2))
        axis = normalize(rng.standard_normal(2))
        v = minimize_hinge(HingeProblem(X, y, tau, ConeCap(axis, half)), 2000)
        mine = hinge_objective(v, X, y, tau)
        oracle, _ = hinge_grid_oracle(X, y, tau, axis.w, half)
        assert mine <= oracle + 5e-3


def test_hinge_feasibility_and_monotone_budgets():
    rng = np.random.default_rng(43)
    X = rng.standard_normal((60, 3))
    y = np.where(rng.random(60) < 0.4, 1.0, -1.0)
    axis = normalize(np.array([1.0, 0.5, -0.2]))
    cone = ConeCap(axis, 0.6)
    previous = np.inf
    for iters in (50, 100, 200, 400):
        v = minimize_hinge(HingeProblem(X, y, 0.7, cone), iters)
        assert np.linalg.norm(v) <= 1.0 + 1e-7
        along = float(v @ axis.w)
        perp = np.linalg.norm(v - along * axis.w)
        assert np.arctan2(perp, along) <= 0.6 + 1e-6
        obj = hinge_objective(v, X, y, 0.7)
        assert obj <= previous + 1e-6
        previous = obj


def test_hinge_error_dominated_by_objective():
    rng = np.random.default_rng(47)
    for _ in range(20):
        n = int(rng.integers(5, 40))
        X = rng.standard_normal((n, 3))
        y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
        axis = normalize(rng.standard_normal(3))
        v = minimize_hinge(HingeProblem(X, y, 0.5, ConeCap(axis, 1.0)), 150)
        err = float(np.mean(np.where(X @ v >= 0, 1.0, -1.0) != y))
        assert err <= hinge_objective(v, X, y, 0.5) + 1e-12
