"""Error metrics, Monte Carlo estimation, and distributional checkers.

Estimators are pure functions of their arguments and seed. Confidence radii
use the 95% Hoeffding convention sqrt(ln(2/0.05) / (2n)) throughout so that
reports from different checks are directly comparable. Checks on fewer than
1000 samples report their statistic but suppress the pass/fail verdict.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import jsonutil
from .geometry import Hyperplane, classify_batch, normalize
from .synthdata import (
    DISAGREEMENT_ANGLE_LOWER,
    FAR_BAND_SCALE,
    LabeledSampler,
    MarginalSpec,
    NoiseSpec,
    apply_bounded,
    band_mass,
    label_realizable,
    sample_marginal,
)

UNDERPOWERED_N = 1000


def hoeffding_radius(n: int, confidence: float = 0.95) -> float:
    """Two-sided Hoeffding deviation bound for a mean of [0,1] variables."""
    return math.sqrt(math.log(2.0 / (1.0 - confidence)) / (2.0 * n))


@dataclass(frozen=True)
class ErrorEstimate:
    """Monte Carlo error value with its sample count and confidence radius."""

    value: float
    n: int
    ci_radius: float

    @classmethod
    def from_mean(cls, value: float, n: int) -> "ErrorEstimate":
        return cls(float(value), int(n), hoeffding_radius(n))

    def to_dict(self) -> dict:
        return {"value": self.value, "n": self.n, "ci_radius": self.ci_radius}


@dataclass(frozen=True)
class PropertyCheck:
    """One named empirical check: statistic vs bound, pass unless underpowered."""

    name: str
    statistic: float
    bound: float
    passed: bool | None
    n: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "statistic": self.statistic,
            "bound": self.bound,
            "pass": self.passed,
            "n": self.n,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class PropertyReport:
    checks: tuple

    @property
    def all_pass(self) -> bool:
        return all(c.passed is not False for c in self.checks)

    @property
    def underpowered(self) -> bool:
        return any(c.passed is None for c in self.checks)

    def to_json_lines(self) -> str:
        return "\n".join(jsonutil.dumps(c.to_dict()) for c in self.checks)


def predict_labels(classifier, X: np.ndarray) -> np.ndarray:
    """Labels in {-1,+1} from a Hyperplane, model object, or callable."""
    if hasattr(classifier, "predict_batch"):
        return np.asarray(classifier.predict_batch(X))
    if callable(classifier):
        return np.asarray(classifier(X))
    raise TypeError(f"cannot classify with {type(classifier).__name__}")


def empirical_error(classifier, dataset) -> float:
    """Exact fraction of label mismatches on the dataset."""
    if dataset.n == 0:
        raise ValueError("empirical error needs a nonempty sample")
    preds = predict_labels(classifier, dataset.X)
    return float(np.mean(preds != dataset.y))


def mc_error(
    classifier,
    marginal: MarginalSpec,
    w_star: Hyperplane,
    noise: NoiseSpec,
    n: int,
    seed: int,
) -> ErrorEstimate:
    """Monte Carlo expected error on a fresh labeled evaluation stream."""
    if n < 1:
        raise ValueError("need at least one evaluation sample")
    stream = LabeledSampler(marginal, w_star, noise, seed)
    dataset = stream.draw(n)
    return ErrorEstimate.from_mean(empirical_error(classifier, dataset), n)


def disagreement(f, g, X: np.ndarray) -> float:
    """Fraction of instances the two classifiers label differently."""
    X = np.asarray(X, dtype=float)
    if X.shape[0] == 0:
        raise ValueError("disagreement needs a nonempty instance set")
    return float(np.mean(predict_labels(f, X) != predict_labels(g, X)))


def _rotated_pair(base: Hyperplane, alpha: float, rng) -> Hyperplane:
    """Unit vector at angle exactly alpha from base, in a random 2-plane."""
    g = rng.standard_normal(base.d)
    g -= (g @ base.w) * base.w
    norm = np.linalg.norm(g)
    if norm <= 1e-12:
        g = np.zeros(base.d)
        g[0 if abs(base.w[0]) < 0.9 else 1] = 1.0
        g -= (g @ base.w) * base.w
        norm = np.linalg.norm(g)
    u = g / norm
    return normalize(math.cos(alpha) * base.w + math.sin(alpha) * u)


def check_logconcave_properties(
    marginal: MarginalSpec, n: int, seed: int, sample_fn=None
) -> PropertyReport:
    """Empirical checks of the isotropic log-concave property suite.

    Tail mass at r in {1.5, 2, 3} against exp(-r+1); the disagreement-equals
    angle/pi identity on 50 random halfspace pairs; band mass against the
    marginal's exact one-dimensional band probability at three widths; and
    the far-band disagreement bound at two angles. ``sample_fn(n, seed)`` may
    replace the marginal sampler (test hook for negative controls).
    """
    X = sample_fn(n, seed) if sample_fn is not None else sample_marginal(marginal, n, seed)
    n = X.shape[0]
    d = X.shape[1]
    powered = n >= UNDERPOWERED_N
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(97,))))
    checks = []

    def record(name, statistic, bound, ok):
        checks.append(
            PropertyCheck(name, float(statistic), float(bound), ok if powered else None, n, seed)
        )

    norms = np.linalg.norm(X, axis=1)
    for r in (1.5, 2.0, 3.0):
        stat = float(np.mean(norms >= r * math.sqrt(d)))
        bound = math.exp(-r + 1.0)
        record(f"tail_r{r:g}", stat, bound, stat <= bound)

    worst = 0.0
    for _ in range(50):
        w = normalize(rng.standard_normal(d))
        v = normalize(rng.standard_normal(d))
        theta = float(np.arctan2(np.linalg.norm(v.w - (v.w @ w.w) * w.w), v.w @ w.w))
        emp = float(np.mean(np.sign(X @ w.w) * np.sign(X @ v.w) < 0))
        worst = max(worst, abs(emp - theta / math.pi))
    record("disagreement_identity", worst, 0.005, worst <= 0.005)

    w_band = normalize(rng.standard_normal(d))
    for gamma in (0.05, 0.1, 0.3):
        target = band_mass(marginal, gamma)
        emp = float(np.mean(np.abs(X @ w_band.w) <= gamma))
        sigma = math.sqrt(max(target * (1.0 - target), 1e-12) / n)
        stat = abs(emp - target)
        record(f"band_mass_g{gamma:g}", stat, 3.0 * sigma, stat <= 3.0 * sigma)

    far_coef = DISAGREEMENT_ANGLE_LOWER / 8.0
    for alpha in (0.05, 0.2):
        w = normalize(rng.standard_normal(d))
        v = _rotated_pair(w, alpha, rng)
        margins = X @ w.w
        differ = np.sign(margins) * np.sign(X @ v.w) < 0
        stat = float(np.mean((np.abs(margins) >= FAR_BAND_SCALE * alpha) & differ))
        bound = far_coef * alpha
        record(f"far_band_a{alpha:g}", stat, bound, stat <= bound)

    return PropertyReport(tuple(checks))


def check_excess_sandwich(
    classifier,
    w_star: Hyperplane,
    nu: float,
    marginal: MarginalSpec,
    rate_fn,
    n: int,
    seed: int,
    *,
    sigma=None,
) -> PropertyReport:
    """Excess error vs disagreement sandwich under bounded noise.

    On one shared evaluation stream, checks
    (1-2nu) P[h != h*] <= err(h) - err(h*) <= P[h != h*]
    and the variance identity E[(err_pt(h) - err_pt(h*))^2] = P[h != h*],
    each within 3 confidence radii.
    """
    if not 0.0 <= nu < 0.5:
        raise ValueError("noise level nu must lie in [0, 0.5)")
    X = sample_marginal(marginal, n, seed)
    clean = label_realizable(X, w_star, marginal=marginal, seed=seed)
    noisy = apply_bounded(clean, w_star, nu, rate_fn, seed, sigma=sigma)

    pred_h = predict_labels(classifier, X).astype(np.int8)
    pred_star = classify_batch(w_star, X)
    err_h = (pred_h != noisy.y).astype(float)
    err_star = (pred_star != noisy.y).astype(float)
    excess = float(np.mean(err_h) - np.mean(err_star))
    dis = float(np.mean(pred_h != pred_star))
    variance = float(np.mean((err_h - err_star) ** 2))

    slack = 3.0 * hoeffding_radius(n)
    powered = n >= UNDERPOWERED_N
    checks = (
        PropertyCheck(
            "excess_lower",
            (1.0 - 2.0 * nu) * dis - excess,
            slack,
            ((1.0 - 2.0 * nu) * dis - excess <= slack) if powered else None,
            n,
            seed,
        ),
        PropertyCheck(
            "excess_upper",
            excess - dis,
            slack,
            (excess - dis <= slack) if powered else None,
            n,
            seed,
        ),
        PropertyCheck(
            "excess_variance_identity",
            abs(variance - dis),
            slack,
            (abs(variance - dis) <= slack) if powered else None,
            n,
            seed,
        ),
    )
    return PropertyReport(checks)
