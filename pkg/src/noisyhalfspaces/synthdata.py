"""Seeded synthetic data: isotropic log-concave marginals plus label noise.

Randomness contract: every sample index draws from a counter-style Philox
stream keyed by ``(seed, tag, chunk)``, so a dataset is a pure function of
(spec, seed) regardless of generation order, batching, or thread count, and
the first n samples of a stream never change when more are drawn.

Two marginal presets (standard Gaussian; uniform ball of radius sqrt(d+2),
both with identity covariance) and five label-noise processes: none, random
classification noise, bounded (Massart) noise, adversarial label flips with
an exact corruption budget, and malicious sample replacement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .geometry import DimensionMismatch, Hyperplane, classify_batch, normalize

_CHUNK = 4096

_TAG_MARGINAL = 0
_TAG_FLIP = 1
_TAG_BATCH = 2
_TAG_DIRECTION = 3
_TAG_WSTAR = 4
_TAG_DERIVED = 5

MALICIOUS_ORTHOGONAL_SCALE = 2.0
MALICIOUS_BOUNDARY_OFFSET = 0.15

# Distribution constants for the preset marginals. For rotation-invariant
# marginals the disagreement of two halfspaces is exactly angle/pi, so the
# angle-vs-error coefficients coincide; the band-mass coefficients bracket
# P(|w.x| <= gamma)/gamma for band widths up to 1.
DISAGREEMENT_ANGLE_UPPER = 1.0 / math.pi
DISAGREEMENT_ANGLE_LOWER = 1.0 / math.pi
BAND_MASS_LOWER_COEF = 0.48
BAND_MASS_UPPER_COEF = 0.8
FAR_BAND_SCALE = 4.0

MARGINAL_KINDS = ("gaussian", "uniform_ball")
NOISE_KINDS = ("none", "rcn", "bounded", "adversarial_flip", "malicious")
RATE_FN_PRESETS = ("constant", "margin_decay")
ADVERSARIAL_STRATEGIES = ("nearest_boundary", "orthogonal_bias", "random")
MALICIOUS_STRATEGIES = ("orthogonal_cluster", "boundary_cluster")


@dataclass(frozen=True)
class MarginalSpec:
    """Preset isotropic log-concave marginal over R^d."""

    kind: str
    d: int

    def __post_init__(self):
        if self.kind not in MARGINAL_KINDS:
            raise ValueError(f"unknown marginal kind {self.kind!r}")
        if self.d < 1:
            raise ValueError("dimension must be >= 1")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "d": self.d}


@dataclass(frozen=True)
class NoiseSpec:
    """Which label corruption is applied, with exactly its own parameters."""

    kind: str
    nu: float | None = None
    budget: float | None = None
    rate_fn: str | None = None
    sigma: float | None = None
    strategy: str | None = None

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}")
        required = {
            "none": set(),
            "rcn": {"nu"},
            "bounded": {"nu", "rate_fn"},
            "adversarial_flip": {"budget", "strategy"},
            "malicious": {"budget", "strategy"},
        }[self.kind]
        if self.kind == "bounded" and self.rate_fn == "margin_decay":
            required = required | {"sigma"}
        present = {
            name
            for name in ("nu", "budget", "rate_fn", "sigma", "strategy")
            if getattr(self, name) is not None
        }
        if present != required:
            raise ValueError(
                f"noise kind {self.kind!r} requires exactly {sorted(required)}, "
                f"got {sorted(present)}"
            )
        if self.nu is not None and not 0.0 <= self.nu < 0.5:
            raise ValueError("noise level nu must lie in [0, 0.5)")
        if self.budget is not None and not 0.0 <= self.budget < 1.0:
            raise ValueError("corruption budget must lie in [0, 1)")
        if self.rate_fn is not None and self.rate_fn not in RATE_FN_PRESETS:
            raise ValueError(f"unknown rate_fn preset {self.rate_fn!r}")
        if self.sigma is not None and self.sigma <= 0.0:
            raise ValueError("margin_decay sigma must be positive")
        if self.kind == "adversarial_flip" and self.strategy not in ADVERSARIAL_STRATEGIES:
            raise ValueError(f"unknown adversarial strategy {self.strategy!r}")
        if self.kind == "malicious" and self.strategy not in MALICIOUS_STRATEGIES:
            raise ValueError(f"unknown malicious strategy {self.strategy!r}")

    @classmethod
    def none(cls) -> "NoiseSpec":
        return cls("none")

    @classmethod
    def rcn(cls, nu: float) -> "NoiseSpec":
        return cls("rcn", nu=nu)

    @classmethod
    def bounded(cls, nu: float, rate_fn: str = "constant", sigma=None) -> "NoiseSpec":
        return cls("bounded", nu=nu, rate_fn=rate_fn, sigma=sigma)

    @classmethod
    def adversarial_flip(cls, budget: float, strategy: str) -> "NoiseSpec":
        return cls("adversarial_flip", budget=budget, strategy=strategy)

    @classmethod
    def malicious(cls, budget: float, strategy: str) -> "NoiseSpec":
        return cls("malicious", budget=budget, strategy=strategy)

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        for name in ("nu", "budget", "rate_fn", "sigma", "strategy"):
            value = getattr(self, name)
            if value is not None:
                out[name] = value
        return out


@dataclass(frozen=True, eq=False)
class LabeledSample:
    x: np.ndarray
    y: int


@dataclass(frozen=True, eq=False)
class Provenance:
    marginal: MarginalSpec | None
    noise: NoiseSpec
    w_star: Hyperplane | None
    seed: int | None


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable labeled sample set; all rows share one dimension."""

    X: np.ndarray  # (n, d)
    y: np.ndarray  # (n,) int8 in {-1, +1}
    provenance: Provenance | None = None

    def __post_init__(self):
        X = np.ascontiguousarray(self.X, dtype=float)
        y = np.ascontiguousarray(self.y, dtype=np.int8)
        if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.size:
            raise ValueError("sample matrix/label shapes disagree")
        if y.size and not np.all(np.abs(y) == 1):
            raise ValueError("labels must be -1 or +1")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def __len__(self) -> int:
        return self.n

    def __iter__(self):
        for i in range(self.n):
            yield LabeledSample(self.X[i], int(self.y[i]))


def _stream(seed: int, tag: int, chunk: int) -> np.random.Generator:
    key = np.random.SeedSequence(int(seed), spawn_key=(int(tag), int(chunk)))
    return np.random.Generator(np.random.Philox(key))


def _marginal_chunk(spec: MarginalSpec, seed: int, chunk: int) -> np.ndarray:
    rng = _stream(seed, _TAG_MARGINAL, chunk)
    gauss = rng.standard_normal((_CHUNK, spec.d))
    if spec.kind == "gaussian":
        return gauss
    # Uniform ball of radius sqrt(d+2): direction from the Gaussian draw,
    # radius density proportional to r^(d-1).
    u = rng.random(_CHUNK)
    norms = np.maximum(np.linalg.norm(gauss, axis=1), 1e-300)
    radii = math.sqrt(spec.d + 2) * u ** (1.0 / spec.d)
    return gauss * (radii / norms)[:, None]


def _indexed_uniforms(seed: int, tag: int, start: int, n: int) -> np.ndarray:
    if n == 0:
        return np.zeros(0)
    first, last = start // _CHUNK, (start + n - 1) // _CHUNK
    parts = [_stream(seed, tag, c).random(_CHUNK) for c in range(first, last + 1)]
    flat = np.concatenate(parts)
    offset = start - first * _CHUNK
    return flat[offset : offset + n]


def batch_seed(seed: int, batch_index: int) -> int:
    """Derived 63-bit seed for per-batch dataset-level noise operations."""
    key = np.random.SeedSequence(int(seed), spawn_key=(_TAG_BATCH, int(batch_index)))
    return int(key.generate_state(1, np.uint64)[0] >> 1)


def derived_seed(seed: int, purpose: int) -> int:
    """Independent 63-bit seed for a named sub-stream (e.g. evaluation)."""
    key = np.random.SeedSequence(int(seed), spawn_key=(_TAG_DERIVED, int(purpose)))
    return int(key.generate_state(1, np.uint64)[0] >> 1)


def orthogonal_direction(w_star: Hyperplane, seed: int) -> np.ndarray:
    """Seed-derived unit vector orthogonal to w_star (d >= 2)."""
    if w_star.d < 2:
        raise ValueError("no orthogonal direction exists in dimension 1")
    rng = _stream(seed, _TAG_DIRECTION, 0)
    for _ in range(16):
        g = rng.standard_normal(w_star.d)
        g -= (g @ w_star.w) * w_star.w
        norm = np.linalg.norm(g)
        if norm > 1e-9:
            return g / norm
    raise RuntimeError("failed to draw an orthogonal direction")


def random_hyperplane(d: int, seed: int) -> Hyperplane:
    """Seed-derived uniformly random unit vector in R^d."""
    rng = _stream(seed, _TAG_WSTAR, 0)
    while True:
        g = rng.standard_normal(d)
        if np.linalg.norm(g) > 1e-9:
            return normalize(g)


def sample_marginal(spec: MarginalSpec, n: int, seed: int, start: int = 0) -> np.ndarray:
    """n i.i.d. draws from the marginal, indices [start, start + n)."""
    if n < 0:
        raise ValueError("sample count must be nonnegative")
    if n == 0:
        return np.zeros((0, spec.d))
    first, last = start // _CHUNK, (start + n - 1) // _CHUNK
    parts = [_marginal_chunk(spec, seed, c) for c in range(first, last + 1)]
    flat = np.concatenate(parts, axis=0)
    offset = start - first * _CHUNK
    return flat[offset : offset + n]


def label_realizable(X: np.ndarray, w_star: Hyperplane, *, marginal=None, seed=None) -> Dataset:
    """Label instances by the ground-truth halfspace; empirical error is zero."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != w_star.d:
        raise DimensionMismatch(f"instance shape {X.shape} vs hyperplane d={w_star.d}")
    y = classify_batch(w_star, X)
    prov = Provenance(marginal, NoiseSpec.none(), w_star, seed)
    return Dataset(X, y, prov)


def _with_noise(dataset: Dataset, noise: NoiseSpec, X=None, y=None) -> Dataset:
    prov = dataset.provenance
    prov = replace(prov, noise=noise) if prov is not None else None
    return Dataset(
        dataset.X if X is None else X,
        dataset.y if y is None else y,
        prov,
    )


def apply_rcn(dataset: Dataset, nu: float, seed: int) -> Dataset:
    """Flip each label independently with probability nu."""
    if not 0.0 <= nu < 0.5:
        raise ValueError("noise level nu must lie in [0, 0.5)")
    u = _indexed_uniforms(seed, _TAG_FLIP, 0, dataset.n)
    flips = u < nu
    y = np.where(flips, -dataset.y, dataset.y).astype(np.int8)
    return _with_noise(dataset, NoiseSpec.rcn(nu), y=y)


def resolve_rate_fn(rate_fn, nu: float, sigma=None):
    """Turn a rate preset (or callable on margins) into a vectorized callable."""
    if callable(rate_fn):
        return rate_fn
    if rate_fn == "constant":
        return lambda z: np.full_like(z, nu, dtype=float)
    if rate_fn == "margin_decay":
        if sigma is None or sigma <= 0.0:
            raise ValueError("margin_decay requires a positive sigma")
        return lambda z: nu * np.exp(-np.abs(z) / sigma)
    raise ValueError(f"unknown rate_fn {rate_fn!r}")


def apply_bounded(
    dataset: Dataset,
    w_star: Hyperplane,
    nu: float,
    rate_fn,
    seed: int,
    *,
    sigma=None,
    _start: int = 0,
) -> Dataset:
    """Flip the label of x independently with probability rate_fn(w_star . x).

    Presets: "constant" flips at rate nu everywhere; "margin_decay" at
    nu * exp(-|w_star . x| / sigma). A callable rate_fn receives the vector
    of margins and must return per-sample probabilities in [0, nu]; this is
    the caller's contract and is deliberately not clipped, so that broken
    noise processes can be fed to the checkers as negative controls.
    """
    if not 0.0 <= nu < 0.5:
        raise ValueError("noise level nu must lie in [0, 0.5)")
    rate = resolve_rate_fn(rate_fn, nu, sigma)
    margins = dataset.X @ w_star.w
    probs = np.asarray(rate(margins), dtype=float)
    u = _indexed_uniforms(seed, _TAG_FLIP, _start, dataset.n)
    flips = u < probs
    y = np.where(flips, -dataset.y, dataset.y).astype(np.int8)
    kind = rate_fn if isinstance(rate_fn, str) else "constant"
    spec_sigma = sigma if kind == "margin_decay" else None
    return _with_noise(dataset, NoiseSpec.bounded(nu, kind, spec_sigma), y=y)


def apply_adversarial_flip(
    dataset: Dataset,
    w_star: Hyperplane,
    budget: float,
    strategy: str,
    seed: int,
    *,
    direction=None,
) -> Dataset:
    """Flip exactly floor(budget * n) labels under the chosen strategy.

    nearest_boundary targets the smallest |w_star . x|; orthogonal_bias
    targets correctly labeled points with the largest |u . x| for a fixed
    seed-derived unit u orthogonal to w_star; random flips a uniform subset.
    """
    if not 0.0 <= budget < 1.0:
        raise ValueError("corruption budget must lie in [0, 1)")
    if strategy not in ADVERSARIAL_STRATEGIES:
        raise ValueError(f"unknown adversarial strategy {strategy!r}")
    k = int(budget * dataset.n)
    if k == 0:
        return _with_noise(dataset, NoiseSpec.adversarial_flip(budget, strategy))
    if strategy == "nearest_boundary":
        margins = np.abs(dataset.X @ w_star.w)
        chosen = np.argsort(margins, kind="stable")[:k]
    elif strategy == "orthogonal_bias":
        u = direction if direction is not None else orthogonal_direction(w_star, seed)
        score = np.abs(dataset.X @ u)
        correct = dataset.y == classify_batch(w_star, dataset.X)
        order = np.argsort(-score, kind="stable")
        ranked = np.concatenate([order[correct[order]], order[~correct[order]]])
        chosen = ranked[:k]
    else:
        rng = _stream(seed, _TAG_FLIP, 0)
        chosen = rng.permutation(dataset.n)[:k]
    y = dataset.y.copy()
    y[chosen] = -y[chosen]
    return _with_noise(dataset, NoiseSpec.adversarial_flip(budget, strategy), y=y)


def apply_malicious(
    dataset: Dataset,
    budget: float,
    strategy: str,
    seed: int,
    *,
    direction=None,
) -> Dataset:
    """Replace exactly floor(budget * n) samples with adversarial fakes.

    orthogonal_cluster plants every fake at c * u for a fixed unit u
    orthogonal to the provenance w_star, labeled opposite to the true label
    of u; boundary_cluster plants fakes just outside a thin margin of
    w_star's boundary at one consistent position with a consistently wrong
    label. Replaced indices are chosen uniformly by seed.
    """
    if not 0.0 <= budget < 1.0:
        raise ValueError("corruption budget must lie in [0, 1)")
    if strategy not in MALICIOUS_STRATEGIES:
        raise ValueError(f"unknown malicious strategy {strategy!r}")
    if dataset.provenance is None or dataset.provenance.w_star is None:
        raise ValueError("malicious corruption needs the provenance ground truth")
    w_star = dataset.provenance.w_star
    k = int(budget * dataset.n)
    if k == 0:
        return _with_noise(dataset, NoiseSpec.malicious(budget, strategy))
    u = direction if direction is not None else orthogonal_direction(w_star, seed)
    if strategy == "orthogonal_cluster":
        fake_x = MALICIOUS_ORTHOGONAL_SCALE * u
        fake_y = -1 if float(w_star.w @ fake_x) >= 0.0 else 1
    else:
        fake_x = MALICIOUS_BOUNDARY_OFFSET * w_star.w + MALICIOUS_ORTHOGONAL_SCALE * u
        fake_y = -1 if float(w_star.w @ fake_x) >= 0.0 else 1
    rng = _stream(seed, _TAG_FLIP, 0)
    chosen = rng.permutation(dataset.n)[:k]
    X = dataset.X.copy()
    y = dataset.y.copy()
    X[chosen] = fake_x
    y[chosen] = fake_y
    return _with_noise(dataset, NoiseSpec.malicious(budget, strategy), X=X, y=y)


class LabeledSampler:
    """Deterministic stream of labeled draws from (marginal, w_star, noise).

    Successive ``draw`` calls consume consecutive sample indices, so the
    stream a sampler produces depends only on its constructor arguments and
    the sequence of draw sizes. Per-sample noise (rcn, bounded) is keyed by
    sample index; dataset-level noise (adversarial_flip, malicious) is
    applied per batch with a derived batch seed and a direction fixed once
    per stream.
    """

    def __init__(self, marginal: MarginalSpec, w_star: Hyperplane, noise: NoiseSpec, seed: int):
        if marginal.d != w_star.d:
            raise DimensionMismatch("marginal and ground truth dimensions differ")
        self.marginal = marginal
        self.w_star = w_star
        self.noise = noise
        self.seed = int(seed)
        self._cursor = 0
        self._batch = 0
        self._direction = None
        if noise.kind in ("adversarial_flip", "malicious") and marginal.d >= 2:
            self._direction = orthogonal_direction(w_star, self.seed)

    def draw(self, n: int) -> Dataset:
        start = self._cursor
        X = sample_marginal(self.marginal, n, self.seed, start=start)
        base = label_realizable(X, self.w_star, marginal=self.marginal, seed=self.seed)
        self._cursor += n
        noise = self.noise
        if noise.kind == "none" or n == 0:
            out = base
        elif noise.kind == "rcn":
            u = _indexed_uniforms(self.seed, _TAG_FLIP, start, n)
            y = np.where(u < noise.nu, -base.y, base.y).astype(np.int8)
            out = _with_noise(base, noise, y=y)
        elif noise.kind == "bounded":
            out = apply_bounded(
                base, self.w_star, noise.nu, noise.rate_fn, self.seed,
                sigma=noise.sigma, _start=start,
            )
        elif noise.kind == "adversarial_flip":
            out = apply_adversarial_flip(
                base, self.w_star, noise.budget, noise.strategy,
                batch_seed(self.seed, self._batch), direction=self._direction,
            )
        else:
            out = apply_malicious(
                base, noise.budget, noise.strategy,
                batch_seed(self.seed, self._batch), direction=self._direction,
            )
        self._batch += 1
        return out


def std_normal_cdf(z: float) -> float:
    """Standard normal CDF via the error function."""
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


def gaussian_band_mass(gamma: float) -> float:
    """P(|w . x| <= gamma) for standard Gaussian x and unit w."""
    return 2.0 * std_normal_cdf(gamma) - 1.0


def uniform_ball_band_mass(gamma: float, d: int) -> float:
    """P(|w . x| <= gamma) for x uniform on the radius-sqrt(d+2) ball.

    The 1-D marginal density is c (1 - z^2/R^2)^((d-1)/2) / R on [-R, R];
    integrated here by Simpson's rule on a fine fixed grid.
    """
    radius = math.sqrt(d + 2)
    gamma = min(abs(gamma), radius)
    if gamma == 0.0:
        return 0.0
    const = math.gamma(d / 2 + 1) / (math.sqrt(math.pi) * math.gamma((d + 1) / 2))
    grid = np.linspace(0.0, gamma, 4097)
    dens = (const / radius) * np.maximum(1.0 - (grid / radius) ** 2, 0.0) ** ((d - 1) / 2)
    h = grid[1] - grid[0]
    weights = np.ones_like(grid)
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    return float(2.0 * (h / 3.0) * (weights @ dens))


def band_mass(marginal: MarginalSpec, gamma: float) -> float:
    """Exact band mass P(|w . x| <= gamma) for a marginal preset."""
    if marginal.kind == "gaussian":
        return gaussian_band_mass(gamma)
    return uniform_ball_band_mass(gamma, marginal.d)


def write_csv(dataset: Dataset, path) -> None:
    """Write the CSV interchange format: header x0..x{d-1},y; LF; 17 digits."""
    d = dataset.d
    header = ",".join([f"x{j}" for j in range(d)] + ["y"])
    lines = [header]
    for i in range(dataset.n):
        coords = ",".join(format(v, ".17g") for v in dataset.X[i])
        sep = "," if d else ""
        lines.append(f"{coords}{sep}{int(dataset.y[i])}")
    data = ("\n".join(lines) + "\n").encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(data)


def read_csv(path) -> Dataset:
    """Read the CSV interchange format back into a Dataset (no provenance)."""
    with open(path, "rb") as fh:
        text = fh.read().decode("utf-8")
    lines = [line for line in text.split("\n") if line]
    header = lines[0].split(",")
    if header[-1] != "y" or any(h != f"x{j}" for j, h in enumerate(header[:-1])):
        raise ValueError("malformed dataset header")
    d = len(header) - 1
    rows = np.array(
        [[float(v) for v in line.split(",")] for line in lines[1:]], dtype=float
    ).reshape(len(lines) - 1, d + 1)
    return Dataset(rows[:, :d], rows[:, d].astype(np.int8))
