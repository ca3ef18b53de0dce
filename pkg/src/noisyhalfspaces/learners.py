"""Learning algorithms for halfspaces under label noise.

* ``train_lp_realizable``   -- perfect-on-sample oracle via LP feasibility.
* ``train_kearns_li``       -- reduction from small agnostic noise to the
  realizable oracle with repetition and validation.
* ``train_averaging``       -- normalized label-weighted mean.
* ``train_poly_regression`` -- improper learning by L1-fitting a low-degree
  polynomial and thresholding it.
* ``localize`` + band oracles -- margin-based localization that halves the
  angle to the optimum each round by minimizing hinge loss (optionally after
  polynomial de-noising) inside a shrinking band around the boundary.

All learners are deterministic functions of (data, config, seed). Ties
break toward the lowest index everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations_with_replacement

import numpy as np

from . import jsonutil
from .evaluation import empirical_error
from .geometry import ConeCap, Hyperplane, angle, classify_batch, in_band_mask, normalize
from .solvers import HingeProblem, LinearConstraintSystem, hinge_objective, l1_fit, lp_feasible, minimize_hinge
from .synthdata import (
    BAND_MASS_LOWER_COEF,
    BAND_MASS_UPPER_COEF,
    DISAGREEMENT_ANGLE_LOWER,
    DISAGREEMENT_ANGLE_UPPER,
    FAR_BAND_SCALE,
    Dataset,
    gaussian_band_mass,
)

MAX_MONOMIALS = 1_000_000
DEFAULT_KEARNS_LI_CAP = 2000
DEFAULT_BAND_QUOTA = 4000
DEFAULT_HINGE_ITERS = 200


class FeatureBlowup(ValueError):
    """The monomial expansion would exceed the feature-count guard."""


class NoCandidate(RuntimeError):
    """Every realizable-oracle call came back infeasible."""


class InsufficientBandSamples(RuntimeError):
    """A localization round could not fill its band quota within the draw cap."""


def realizable_sample_bound(d: int, epsilon: float, delta: float) -> int:
    """Samples sufficient for the realizable setting at accuracy/confidence.

    ceil((4/eps) (d ln(12/eps) + ln(2/delta))): any classifier consistent
    with that many i.i.d. samples has true error <= eps with probability
    1 - delta.
    """
    if not (0.0 < epsilon < 1.0 and 0.0 < delta < 1.0):
        raise ValueError("epsilon and delta must lie in (0, 1)")
    if d < 1:
        raise ValueError("dimension must be >= 1")
    return math.ceil((4.0 / epsilon) * (d * math.log(12.0 / epsilon) + math.log(2.0 / delta)))


def train_lp_realizable(dataset: Dataset) -> Hyperplane | None:
    """The realizable oracle: a zero-error halfspace on S, or None.

    Builds the constraint rows y (v . x) >= 1 and solves them with the
    feasibility simplex; a returned vector is normalized and perfectly
    classifies the sample, and None certifies that no consistent halfspace
    exists.
    """
    if dataset.n == 0:
        raise ValueError("need a nonempty training sample")
    rows = dataset.y[:, None] * dataset.X
    system = LinearConstraintSystem(rows, np.ones(dataset.n))
    point = lp_feasible(system)
    if point is None:
        return None
    return normalize(point)


def train_averaging(dataset: Dataset) -> Hyperplane:
    """Normalized label-weighted mean of the instances."""
    if dataset.n == 0:
        raise ValueError("need a nonempty training sample")
    mean = (dataset.y[:, None] * dataset.X).mean(axis=0)
    return normalize(mean)


def train_kearns_li(
    sampler,
    d: int,
    epsilon: float,
    delta: float,
    *,
    rep_cap: int = DEFAULT_KEARNS_LI_CAP,
    diagnostics: dict | None = None,
) -> Hyperplane:
    """Reduction from low-noise agnostic learning to the realizable oracle.

    Draws repeated fresh sample sets, keeps every set the LP oracle can fit
    perfectly, and returns the kept candidate with the lowest error on a
    fresh validation draw (ties to the earliest). The repetition count is
    capped at ``rep_cap``; the uncapped theoretical count is reported in
    ``diagnostics`` when a dict is supplied.
    """
    if not (0.0 < epsilon < 1.0 and 0.0 < delta < 1.0):
        raise ValueError("epsilon and delta must lie in (0, 1)")
    m = realizable_sample_bound(d, epsilon, 0.5)
    reps_uncapped = m * m * math.log(2.0 / delta)
    reps = max(1, min(math.ceil(reps_uncapped), rep_cap))
    candidates = []
    for i in range(reps):
        drawn = sampler.draw(m)
        model = train_lp_realizable(drawn)
        if model is not None:
            candidates.append((i, model))
    if diagnostics is not None:
        diagnostics.update(
            {
                "oracle_sample_size": m,
                "repetitions": reps,
                "repetitions_uncapped": reps_uncapped,
                "feasible_candidates": len(candidates),
            }
        )
    if not candidates:
        raise NoCandidate(f"all {reps} oracle calls were infeasible")
    m_val = math.ceil((1.0 / epsilon) * math.log(reps / delta))
    validation = sampler.draw(max(1, m_val))
    best_idx, best = candidates[0]
    best_err = empirical_error(best, validation)
    for i, model in candidates[1:]:
        err = empirical_error(model, validation)
        if err < best_err:
            best_idx, best, best_err = i, model, err
    if diagnostics is not None:
        diagnostics["validation_samples"] = max(1, m_val)
        diagnostics["selected_run"] = best_idx
        diagnostics["validation_error"] = best_err
    return best


@lru_cache(maxsize=None)
def monomial_exponents(d: int, degree: int) -> tuple:
    """Exponent tuples of all monomials with total degree <= degree.

    Graded-lex order with the constant term first; length C(d+degree, degree).
    """
    if degree < 1:
        raise ValueError("degree must be >= 1")
    count = math.comb(d + degree, degree)
    if count > MAX_MONOMIALS:
        raise FeatureBlowup(f"{count} monomials exceed the {MAX_MONOMIALS} guard")
    exponents = []
    for total in range(degree + 1):
        for combo in combinations_with_replacement(range(d), total):
            exp = [0] * d
            for idx in combo:
                exp[idx] += 1
            exponents.append(tuple(exp))
    return tuple(exponents)


def expand_monomials_batch(X: np.ndarray, degree: int) -> np.ndarray:
    """(n, C(d+degree, degree)) feature matrix of all monomials up to degree."""
    X = np.asarray(X, dtype=float)
    n, d = X.shape
    exponents = monomial_exponents(d, degree)
    powers = [[np.ones(n)] for _ in range(d)]
    for j in range(d):
        for p in range(1, degree + 1):
            powers[j].append(powers[j][p - 1] * X[:, j])
    columns = []
    for exp in exponents:
        col = np.ones(n)
        for j, p in enumerate(exp):
            if p:
                col = col * powers[j][p]
        columns.append(col)
    return np.column_stack(columns)


def expand_monomials(x, degree: int) -> np.ndarray:
    """Monomial feature vector of a single instance."""
    x = np.asarray(x, dtype=float)
    return expand_monomials_batch(x[None, :], degree)[0]


@dataclass(frozen=True, eq=False)
class Polynomial:
    """Multivariate polynomial over the graded-lex monomial basis."""

    d: int
    degree: int
    coefficients: np.ndarray

    def __post_init__(self):
        coef = np.ascontiguousarray(self.coefficients, dtype=float)
        expected = math.comb(self.d + self.degree, self.degree)
        if coef.shape != (expected,):
            raise ValueError(f"expected {expected} coefficients, got {coef.shape}")
        object.__setattr__(self, "coefficients", coef)

    @property
    def monomial_exponents(self) -> tuple:
        return monomial_exponents(self.d, self.degree)

    def evaluate_batch(self, X: np.ndarray) -> np.ndarray:
        return expand_monomials_batch(X, self.degree) @ self.coefficients


@dataclass(frozen=True, eq=False)
class PolyThreshold:
    """Improper classifier sign(p(x) - theta) with the +1 tie rule."""

    poly: Polynomial
    theta: float

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        return np.where(self.poly.evaluate_batch(X) - self.theta >= 0.0, 1, -1).astype(np.int8)


def select_threshold(values, labels) -> float:
    """Threshold in [-1, 1] minimizing empirical error of sign(value - theta).

    Candidates are the midpoints of adjacent sorted values plus the two
    endpoints, clamped into [-1, 1]; ties break toward the smallest theta.
    """
    values = np.asarray(values, dtype=float)
    labels = np.asarray(labels)
    n = values.size
    if n < 1 or labels.shape != values.shape:
        raise ValueError("need matching nonempty values and labels")
    order = np.argsort(values, kind="stable")
    v_sorted = values[order]
    y_sorted = labels[order]

    candidates = np.concatenate([[-1.0, 1.0], 0.5 * (v_sorted[1:] + v_sorted[:-1])])
    candidates = np.unique(np.clip(candidates, -1.0, 1.0))

    # Predictions are +1 exactly on value >= theta. For each candidate count
    # positives strictly below it and negatives at or above it.
    pos_prefix = np.concatenate([[0], np.cumsum(y_sorted == 1)])
    neg_prefix = np.concatenate([[0], np.cumsum(y_sorted == -1)])
    split = np.searchsorted(v_sorted, candidates, side="left")
    mistakes = pos_prefix[split] + (neg_prefix[n] - neg_prefix[split])
    return float(candidates[int(np.argmin(mistakes))])


def train_poly_regression(dataset: Dataset, degree: int) -> PolyThreshold:
    """L1-fit a degree-bounded polynomial to the labels, then threshold it.

    The fitted classifier's training error never exceeds half the final L1
    objective; that inequality is asserted on every run.
    """
    features = expand_monomials_batch(dataset.X, degree)
    if dataset.n < features.shape[1]:
        raise ValueError(
            f"need at least {features.shape[1]} samples for degree {degree} in d={dataset.d}"
        )
    targets = dataset.y.astype(float)
    coef = l1_fit(features, targets)
    fitted = features @ coef
    theta = select_threshold(fitted, dataset.y)
    model = PolyThreshold(Polynomial(dataset.d, degree, coef), theta)
    err = float(np.mean(np.where(fitted - theta >= 0.0, 1, -1) != dataset.y))
    half_l1 = 0.5 * float(np.mean(np.abs(fitted - targets)))
    assert err <= half_l1 + 1e-12, f"threshold error {err} exceeded half L1 loss {half_l1}"
    return model


def repeat_and_validate(trainer, runs: int, validation: Dataset):
    """Train ``runs`` candidates via trainer(run_index), keep the best.

    Selection is by empirical error on the validation set; ties go to the
    lowest run index.
    """
    if runs < 1:
        raise ValueError("need at least one run")
    if validation.n == 0:
        raise ValueError("need a nonempty validation set")
    best = None
    best_err = math.inf
    for i in range(runs):
        model = trainer(i)
        err = empirical_error(model, validation)
        if err < best_err:
            best, best_err = model, err
    return best


@dataclass(frozen=True)
class LocalizationSchedule:
    """Constants and per-round geometry for margin-based localization.

    ``theory`` mode uses the derived constants (band-disagreement target
    ~0.025 with the defaults, which is sample-hungry); ``practical`` mode
    widens them so desk-scale runs converge. Cone angles halve every round.
    """

    mode: str = "practical"
    angle_err_upper: float = DISAGREEMENT_ANGLE_UPPER
    angle_err_lower: float = DISAGREEMENT_ANGLE_LOWER
    band_mass_lower: float = BAND_MASS_LOWER_COEF
    band_mass_upper: float = BAND_MASS_UPPER_COEF
    far_band_scale: float = FAR_BAND_SCALE
    practical_band_factor: float = 1.0
    practical_disagreement_target: float = 0.25
    tolerance_power: float = 4.0

    def __post_init__(self):
        if self.mode not in ("theory", "practical"):
            raise ValueError(f"unknown schedule mode {self.mode!r}")
        for name in (
            "angle_err_upper",
            "angle_err_lower",
            "band_mass_lower",
            "band_mass_upper",
            "far_band_scale",
            "practical_band_factor",
            "practical_disagreement_target",
        ):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")

    @property
    def band_width_factor(self) -> float:
        if self.mode == "practical":
            return self.practical_band_factor
        return max(self.far_band_scale, self.angle_err_lower / self.band_mass_upper)

    @property
    def disagreement_target(self) -> float:
        if self.mode == "practical":
            return self.practical_disagreement_target
        return min(0.25, self.angle_err_lower / (4.0 * self.band_mass_upper * self.far_band_scale))

    def rounds(self, epsilon: float) -> int:
        if not 0.0 < epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")
        return max(1, math.ceil(math.log2(self.angle_err_upper * math.pi / epsilon)) - 1)

    def cone_angle(self, k: int) -> float:
        return math.pi * 2.0 ** (-k)

    def band_width(self, k: int) -> float:
        return self.band_width_factor * self.cone_angle(k)

    def hinge_scale(self, k: int) -> float:
        if self.mode == "practical":
            return self.band_width(k) / 2.0
        return (
            self.band_width(k)
            * self.disagreement_target
            * self.band_mass_lower
            / (4.0 * self.band_mass_upper)
        )

    def tolerance(self, z: float) -> float:
        """Error-tolerance function g for the in-band oracle preconditions."""
        return z**self.tolerance_power

    def to_dict(self, epsilon: float | None = None) -> dict:
        out = {
            "mode": self.mode,
            "angle_err_upper": self.angle_err_upper,
            "angle_err_lower": self.angle_err_lower,
            "band_mass_lower": self.band_mass_lower,
            "band_mass_upper": self.band_mass_upper,
            "far_band_scale": self.far_band_scale,
            "band_width_factor": self.band_width_factor,
            "disagreement_target": self.disagreement_target,
            "tolerance_power": self.tolerance_power,
        }
        if epsilon is not None:
            rounds = self.rounds(epsilon)
            out["rounds"] = rounds
            out["per_round"] = [
                {
                    "k": k,
                    "cone_angle": self.cone_angle(k),
                    "band_width": self.band_width(k),
                    "hinge_scale": self.hinge_scale(k),
                }
                for k in range(1, rounds + 1)
            ]
        return out


def fill_band(sampler, w: Hyperplane, gamma: float, quota: int):
    """Draw until ``quota`` in-band samples are collected.

    Raw draws are capped at ceil(50 quota / (2 Phi(gamma) - 1)); exceeding
    the cap raises InsufficientBandSamples. Returns (X, y, raw_draws).
    """
    if quota < 1:
        raise ValueError("band quota must be >= 1")
    mass = max(gaussian_band_mass(gamma), 1e-12)
    cap = math.ceil(50.0 * quota / mass)
    xs, ys, collected, raw = [], [], 0, 0
    while collected < quota and raw < cap:
        take = min(max(quota, 4096), cap - raw)
        drawn = sampler.draw(take)
        raw += take
        mask = in_band_mask(drawn.X, w, gamma)
        xs.append(drawn.X[mask])
        ys.append(drawn.y[mask])
        collected += int(mask.sum())
    if collected < quota:
        raise InsufficientBandSamples(
            f"collected {collected}/{quota} band samples in {raw} draws (cap {cap})"
        )
    X = np.concatenate(xs, axis=0)[:quota]
    y = np.concatenate(ys)[:quota]
    return X, y, raw


def _normalize_or_axis(v: np.ndarray, axis: Hyperplane) -> Hyperplane:
    if np.linalg.norm(v) <= 1e-12:
        return axis
    return normalize(v)


def band_oracle_hinge(
    sampler,
    w_k: Hyperplane,
    gamma: float,
    alpha: float,
    tau: float,
    quota: int,
    delta: float,
    *,
    iters: int = DEFAULT_HINGE_ITERS,
    target: Hyperplane | None = None,
    info: dict | None = None,
) -> Hyperplane:
    """One localization round: minimize hinge loss over the band sample.

    Fills the band quota, minimizes the tau-scaled hinge loss over the cone
    cap around w_k with half-angle alpha, and returns the normalized
    minimizer. ``delta`` is the round's failure budget; it does not alter
    the deterministic computation.
    """
    del delta
    X, y, raw = fill_band(sampler, w_k, gamma, quota)
    cone = ConeCap(w_k, min(alpha, math.pi / 2.0))
    v = minimize_hinge(HingeProblem(X, y.astype(float), tau, cone), iters)
    result = _normalize_or_axis(v, w_k)
    if info is not None:
        info["band_samples"] = int(y.size)
        info["raw_draws"] = raw
        info["hinge_objective"] = hinge_objective(v, X, y.astype(float), tau)
        if target is not None:
            info["target_band_error"] = float(np.mean(classify_batch(target, X) != y))
    return result


def band_oracle_poly_hinge(
    sampler,
    w_k: Hyperplane,
    gamma: float,
    alpha: float,
    tau: float,
    degree: int,
    nu: float,
    quota: int,
    delta: float,
    *,
    iters: int = DEFAULT_HINGE_ITERS,
    excess_target: float | None = None,
    target: Hyperplane | None = None,
    info: dict | None = None,
) -> Hyperplane:
    """One bounded-noise round: polynomial de-noising, then hinge fitting.

    Step 1 trains the L1 polynomial threshold on a noisy band quota. Step 2
    relabels a fresh band quota with that threshold's predictions and
    minimizes hinge loss over the cone cap on the pseudo-labeled sample.
    """
    del delta
    if not 0.0 <= nu < 0.5:
        raise ValueError("noise level nu must lie in [0, 0.5)")
    X1, y1, raw1 = fill_band(sampler, w_k, gamma, quota)
    denoiser = train_poly_regression(Dataset(X1, y1), degree)
    X2, y2, raw2 = fill_band(sampler, w_k, gamma, quota)
    pseudo = denoiser.predict_batch(X2)
    cone = ConeCap(w_k, min(alpha, math.pi / 2.0))
    v = minimize_hinge(HingeProblem(X2, pseudo.astype(float), tau, cone), iters)
    result = _normalize_or_axis(v, w_k)
    if info is not None:
        info["band_samples"] = int(y1.size + y2.size)
        info["raw_draws"] = raw1 + raw2
        info["hinge_objective"] = hinge_objective(v, X2, pseudo.astype(float), tau)
        info["pseudo_label_flip_rate"] = float(np.mean(pseudo != y2))
        if excess_target is not None:
            info["denoise_excess_target"] = excess_target
        if target is not None:
            info["target_band_error"] = float(np.mean(classify_batch(target, X1) != y1))
            info["denoiser_target_disagreement"] = float(
                np.mean(denoiser.predict_batch(X1) != classify_batch(target, X1))
            )
    return result


def make_hinge_oracle(quota: int, iters: int = DEFAULT_HINGE_ITERS, target=None):
    """Bind quota/iteration knobs into a localize-compatible band oracle."""

    def oracle(sampler, w_k, gamma, alpha, tau, delta, info=None):
        return band_oracle_hinge(
            sampler, w_k, gamma, alpha, tau, quota, delta,
            iters=iters, target=target, info=info,
        )

    return oracle


def make_poly_hinge_oracle(
    quota: int,
    degree: int,
    nu: float,
    iters: int = DEFAULT_HINGE_ITERS,
    excess_target=None,
    target=None,
):
    """Bind the bounded-noise oracle's knobs for use inside localize."""

    def oracle(sampler, w_k, gamma, alpha, tau, delta, info=None):
        return band_oracle_poly_hinge(
            sampler, w_k, gamma, alpha, tau, degree, nu, quota, delta,
            iters=iters, excess_target=excess_target, target=target, info=info,
        )

    return oracle


def localize(
    sampler,
    schedule: LocalizationSchedule,
    band_oracle,
    w_start: Hyperplane,
    epsilon: float,
    delta: float,
    *,
    w_star: Hyperplane | None = None,
    diagnostics: list | None = None,
) -> Hyperplane:
    """Margin-based localization driven by an in-band oracle.

    Runs ``schedule.rounds(epsilon)`` rounds; round k calls the oracle with
    the current hypothesis, band width, cone angle, and per-round failure
    budget delta/r, then adopts its answer. The warm start must be within
    pi/2 of the optimum (supplied by Averaging in the harness; unchecked).
    Per-round diagnostics are appended to ``diagnostics`` when provided.
    """
    if not (0.0 < epsilon < 1.0 and 0.0 < delta < 1.0):
        raise ValueError("epsilon and delta must lie in (0, 1)")
    rounds = schedule.rounds(epsilon)
    w = w_start
    for k in range(1, rounds + 1):
        alpha = schedule.cone_angle(k)
        gamma = schedule.band_width(k)
        tau = schedule.hinge_scale(k)
        info: dict = {}
        w_next = band_oracle(sampler, w, gamma, alpha, tau, delta / rounds, info=info)
        step_angle = angle(w_next, w)
        assert step_angle <= alpha + 1e-6, (
            f"round {k} left the cone: angle {step_angle} > {alpha}"
        )
        if diagnostics is not None:
            record = {
                "round": k,
                "cone_angle": alpha,
                "band_width": gamma,
                "hinge_scale": tau,
                "angle_to_previous": step_angle,
            }
            if w_star is not None:
                record["angle_to_optimum"] = angle(w_next, w_star)
            record.update(info)
            diagnostics.append(record)
        w = w_next
    return w


def model_to_json(model) -> str:
    """Serialize a trained model to the JSON interchange format."""
    if isinstance(model, Hyperplane):
        return jsonutil.dumps({"kind": "halfspace", "d": model.d, "w": model.w.tolist()})
    if isinstance(model, PolyThreshold):
        return jsonutil.dumps(
            {
                "kind": "poly_threshold",
                "d": model.poly.d,
                "degree": model.poly.degree,
                "coeffs": model.poly.coefficients.tolist(),
                "theta": model.theta,
            }
        )
    raise TypeError(f"cannot serialize model of type {type(model).__name__}")


def model_from_json(text: str):
    """Load a model serialized by model_to_json."""
    import json

    data = json.loads(text)
    kind = data.get("kind")
    if kind == "halfspace":
        return Hyperplane(np.asarray(data["w"], dtype=float))
    if kind == "poly_threshold":
        poly = Polynomial(int(data["d"]), int(data["degree"]), np.asarray(data["coeffs"], dtype=float))
        return PolyThreshold(poly, float(data["theta"]))
    raise ValueError(f"unknown model kind {kind!r}")
