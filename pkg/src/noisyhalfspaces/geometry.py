"""Vector primitives for halfspace learning.

Unit-normal hyperplanes, angles, sign thresholds, band membership, and
projection onto the cone-cap constraint set used by constrained hinge
minimization. Everything here is pure and operates on immutable values,
so all functions are safe to call from multiple threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ZERO_VECTOR_TOL = 1e-12
UNIT_NORM_TOL = 1e-9
DYKSTRA_ROUNDS = 50


class ZeroVector(ValueError):
    """A vector with (near-)zero norm was used where a direction is required."""


class DimensionMismatch(ValueError):
    """Operands do not share the same ambient dimension."""


@dataclass(frozen=True, eq=False)
class Hyperplane:
    """Homogeneous linear threshold sign(w . x) for a unit vector w."""

    w: np.ndarray

    def __post_init__(self):
        w = np.ascontiguousarray(self.w, dtype=float)
        if w.ndim != 1 or w.size < 1:
            raise ValueError("hyperplane normal must be a 1-D vector")
        if not np.all(np.isfinite(w)):
            raise ValueError("hyperplane normal must be finite")
        if abs(np.linalg.norm(w) - 1.0) > UNIT_NORM_TOL:
            raise ValueError("hyperplane normal must have unit norm")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    @property
    def d(self) -> int:
        return self.w.size

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        return classify_batch(self, X)


@dataclass(frozen=True, eq=False)
class ConeCap:
    """Intersection of the unit-radius ball with a cone around ``axis``.

    K = { v : ||v|| <= radius and angle(v, axis) <= half_angle }.
    """

    axis: Hyperplane
    half_angle: float
    radius: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.half_angle < np.pi:
            raise ValueError("half_angle must lie in (0, pi)")
        if self.radius <= 0.0:
            raise ValueError("radius must be positive")


def normalize(v) -> Hyperplane:
    """Scale v to unit norm; raises ZeroVector for degenerate input."""
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v)
    if norm <= ZERO_VECTOR_TOL:
        raise ZeroVector(f"cannot normalize vector with norm {norm:.3e}")
    return Hyperplane(v / norm)


def angle(u: Hyperplane, v: Hyperplane) -> float:
    """Angle in [0, pi] between two unit vectors.

    Computed as atan2(||v_perp||, u.v) rather than arccos so that nearly
    parallel and nearly antipodal pairs keep full relative precision.
    """
    if u.d != v.d:
        raise DimensionMismatch(f"dimensions differ: {u.d} vs {v.d}")
    dot = float(u.w @ v.w)
    perp = v.w - dot * u.w
    return float(np.arctan2(np.linalg.norm(perp), dot))


def classify(h: Hyperplane, x) -> int:
    """Label sign(w . x) in {-1, +1}, with the tie rule sign(0) = +1."""
    x = np.asarray(x, dtype=float)
    if x.shape != (h.d,):
        raise DimensionMismatch(f"instance shape {x.shape} vs hyperplane d={h.d}")
    return 1 if float(h.w @ x) >= 0.0 else -1


def classify_batch(h: Hyperplane, X: np.ndarray) -> np.ndarray:
    """Vectorized classify over the rows of an (n, d) matrix."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != h.d:
        raise DimensionMismatch(f"matrix shape {X.shape} vs hyperplane d={h.d}")
    return np.where(X @ h.w >= 0.0, 1, -1).astype(np.int8)


def in_band(x, w: Hyperplane, gamma: float) -> bool:
    """True iff |w . x| <= gamma (closed band around the decision boundary)."""
    if gamma <= 0.0:
        raise ValueError("band width must be positive")
    x = np.asarray(x, dtype=float)
    if x.shape != (w.d,):
        raise DimensionMismatch(f"instance shape {x.shape} vs hyperplane d={w.d}")
    return bool(abs(float(w.w @ x)) <= gamma)


def in_band_mask(X: np.ndarray, w: Hyperplane, gamma: float) -> np.ndarray:
    """Vectorized in_band over the rows of an (n, d) matrix."""
    if gamma <= 0.0:
        raise ValueError("band width must be positive")
    X = np.asarray(X, dtype=float)
    return np.abs(X @ w.w) <= gamma


def _project_cone(v: np.ndarray, axis: np.ndarray, half_angle: float) -> np.ndarray:
    """Exact Euclidean projection onto {u : angle(u, axis) <= half_angle}."""
    along = float(axis @ v)
    perp = v - along * axis
    perp_norm = float(np.linalg.norm(perp))
    theta = float(np.arctan2(perp_norm, along))
    if theta <= half_angle:
        return v
    if theta >= half_angle + np.pi / 2.0:
        return np.zeros_like(v)
    # Project onto the boundary ray spanned by cos(a)*axis + sin(a)*perp_hat.
    if perp_norm <= ZERO_VECTOR_TOL:
        # Anti-parallel to the axis with no usable orthogonal component.
        return np.zeros_like(v)
    boundary = np.cos(half_angle) * axis + np.sin(half_angle) * (perp / perp_norm)
    t = float(boundary @ v)
    if t <= 0.0:
        return np.zeros_like(v)
    return t * boundary


def project_cone_cap(v, cone: ConeCap) -> np.ndarray:
    """Project v onto the cone-cap set K (cone intersected with a ball).

    Alternates the exact second-order-cone projection with norm clipping,
    Dykstra-style with correction terms, for DYKSTRA_ROUNDS rounds. For a
    ball centered at the origin the composition stabilizes immediately;
    the iteration keeps the KKT residual below 1e-8 regardless.
    """
    if not 0.0 < cone.half_angle <= np.pi / 2.0 + 1e-15:
        raise ValueError("projection requires half_angle in (0, pi/2]")
    v = np.asarray(v, dtype=float)
    axis = cone.axis.w
    if v.shape != axis.shape:
        raise DimensionMismatch(f"vector shape {v.shape} vs axis d={axis.size}")
    x = v.copy()
    p = np.zeros_like(v)  # correction for the cone set
    q = np.zeros_like(v)  # correction for the ball set
    for _ in range(DYKSTRA_ROUNDS):
        y = _project_cone(x + p, axis, cone.half_angle)
        p = x + p - y
        norm = float(np.linalg.norm(y + q))
        if norm > cone.radius:
            x = (y + q) * (cone.radius / norm)
        else:
            x = y + q
        q = y + q - x
        if np.linalg.norm(x - y) <= 1e-14:
            break
    return x
