"""Shared brute-force oracles for solver and learner tests.

These deliberately avoid the library's solution paths: coordinate descent
with weighted medians for L1 regression, dense grids for projections and
hinge minimization, and exhaustive scans for thresholds, so each test pits
an implementation against an independent computation.
"""

import numpy as np
import pytest


def l1_objective(features, targets, coef):
    return float(np.mean(np.abs(features @ coef - targets)))


def l1_oracle_objective(features, targets, starts=10, sweeps=300, seed=1):
    """Multi-start exact coordinate descent; returns the best mean objective."""
    rng = np.random.default_rng(seed)
    n, p = features.shape
    best = np.inf
    for s in range(starts):
        coef = np.zeros(p) if s == 0 else rng.standard_normal(p) * 2.0
        residual = targets - features @ coef
        for _ in range(sweeps):
            moved = False
            for j in range(p):
                col = features[:, j]
                live = np.abs(col) > 1e-12
                if not live.any():
                    continue
                ratios = (residual[live] + col[live] * coef[j]) / col[live]
                weights = np.abs(col[live])
                order = np.argsort(ratios)
                csum = np.cumsum(weights[order])
                idx = int(np.searchsorted(csum, 0.5 * csum[-1]))
                new = float(ratios[order][min(idx, ratios.size - 1)])
                if abs(new - coef[j]) > 1e-13:
                    residual -= col * (new - coef[j])
                    coef[j] = new
                    moved = True
            if not moved:
                break
        best = min(best, l1_objective(features, targets, coef))
    return best


def cone_cap_grid(axis, half_angle, radius=1.0, n_angle=721, n_radius=241, n_azimuth=72):
    """Dense grid of points covering the cone cap, for projection oracles."""
    axis = np.asarray(axis, dtype=float)
    d = axis.size
    angles = np.linspace(0.0, half_angle, n_angle)
    radii = np.linspace(0.0, radius, n_radius)
    if d == 2:
        perp = np.array([-axis[1], axis[0]])
        dirs = [
            np.cos(a) * axis + s * np.sin(a) * perp
            for a in angles
            for s in (1.0, -1.0)
        ]
    elif d == 3:
        base = np.eye(3)[np.argmin(np.abs(axis))]
        u = base - (base @ axis) * axis
        u /= np.linalg.norm(u)
        v = np.cross(axis, u)
        dirs = [
            np.cos(a) * axis + np.sin(a) * (np.cos(ps) * u + np.sin(ps) * v)
            for a in angles[:: max(1, n_angle // 90)]
            for ps in np.linspace(0.0, 2.0 * np.pi, n_azimuth, endpoint=False)
        ]
    else:
        raise ValueError("grid oracle supports d in {2, 3}")
    dirs = np.asarray(dirs)
    return (dirs[None, :, :] * radii[:, None, None]).reshape(-1, d)


def hinge_grid_oracle(X, y, tau, axis, half_angle, n_angle=1441, n_radius=200):
    """Exhaustive (direction, radius) grid minimization of the hinge loss, d=2."""
    axis = np.asarray(axis, dtype=float)
    perp = np.array([-axis[1], axis[0]])
    angles = np.linspace(-half_angle, half_angle, n_angle)
    dirs = np.cos(angles)[:, None] * axis + np.sin(angles)[:, None] * perp
    radii = np.linspace(1e-3, 1.0, n_radius)
    margins = (X @ dirs.T) * y[:, None]  # (n, n_angle)
    losses = np.maximum(0.0, 1.0 - radii[:, None, None] * margins.T[None] / tau)
    objectives = losses.mean(axis=2)  # (n_radius, n_angle)
    idx = np.unravel_index(np.argmin(objectives), objectives.shape)
    return float(objectives[idx]), radii[idx[0]] * dirs[idx[1]]


def threshold_scan_oracle(values, labels):
    """Minimum 0-1 error over every threshold interval in [-1, 1]."""
    values = np.asarray(values, dtype=float)
    labels = np.asarray(labels)
    candidates = [-1.0, 1.0]
    sv = np.sort(values)
    candidates.extend(np.clip(0.5 * (sv[1:] + sv[:-1]), -1.0, 1.0))
    candidates.extend(np.clip(sv, -1.0, 1.0))
    candidates.extend(np.clip(sv + 1e-9, -1.0, 1.0))
    best = np.inf
    for theta in candidates:
        preds = np.where(values - theta >= 0.0, 1, -1)
        best = min(best, float(np.mean(preds != labels)))
    return best


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
