"""Batch front-end: configure, run, and report experiments reproducibly.

Subcommands: ``generate`` (dataset CSV), ``run`` (one experiment, JSON
report), ``properties`` (distributional property checks, JSON lines), and
``sweep`` (one swept parameter x seeds x learners, CSV table).

Exit codes: 0 success, 2 config error, 3 learner error, 4 failed property
check.
"""

from __future__ import annotations

import argparse
import copy
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__, jsonutil
from .evaluation import check_logconcave_properties, mc_error
from .geometry import Hyperplane, ZeroVector, angle, normalize
from .learners import (
    DEFAULT_BAND_QUOTA,
    DEFAULT_HINGE_ITERS,
    DEFAULT_KEARNS_LI_CAP,
    FeatureBlowup,
    InsufficientBandSamples,
    LocalizationSchedule,
    NoCandidate,
    PolyThreshold,
    localize,
    make_hinge_oracle,
    make_poly_hinge_oracle,
    train_averaging,
    train_kearns_li,
    train_lp_realizable,
    train_poly_regression,
)
from .solvers import FEASIBILITY_SLACK, L1_OBJECTIVE_TOL, NumericalBreakdown, PIVOT_TOL
from .synthdata import (
    LabeledSampler,
    MarginalSpec,
    NoiseSpec,
    derived_seed,
    random_hyperplane,
    sample_marginal,
    write_csv,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_LEARNER = 3
EXIT_PROPERTY = 4

LEARNER_NAMES = ("lp", "kearns_li", "averaging", "poly", "localize_hinge", "localize_poly_hinge")

_EVAL_STREAM = 1


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the offending key."""


class LearnerFailure(RuntimeError):
    """A learner could not produce a model on this configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    marginal: MarginalSpec
    noise: NoiseSpec
    learner: str
    learner_params: dict
    schedule: LocalizationSchedule
    n_train: int
    n_eval: int
    epsilon: float
    delta: float
    seed: int
    w_star: object  # "random" or explicit coordinate list


def _check_keys(obj: dict, allowed, required, where: str):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be an object")
    for key in obj:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} in {where}")
    for key in required:
        if key not in obj:
            raise ConfigError(f"missing key {key!r} in {where}")


def _as_int(value, where, minimum=None):
    if not isinstance(value, int) or isinstance(value, bool):
        raise ConfigError(f"{where} must be an integer")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{where} must be >= {minimum}")
    return value


def _as_fraction(value, where, lo=0.0, hi=1.0):
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ConfigError(f"{where} must be a number")
    if not lo < value < hi:
        raise ConfigError(f"{where} must lie in ({lo:g}, {hi:g})")
    return float(value)


_LEARNER_PARAMS = {
    "lp": {},
    "kearns_li": {"rep_cap": DEFAULT_KEARNS_LI_CAP},
    "averaging": {},
    "poly": {"degree": 3},
    "localize_hinge": {"quota": DEFAULT_BAND_QUOTA, "hinge_iters": DEFAULT_HINGE_ITERS},
    "localize_poly_hinge": {
        "quota": DEFAULT_BAND_QUOTA,
        "hinge_iters": DEFAULT_HINGE_ITERS,
        "degree": 3,
        "nu": None,
    },
}

_SCHEDULE_KEYS = (
    "mode",
    "angle_err_upper",
    "angle_err_lower",
    "band_mass_lower",
    "band_mass_upper",
    "far_band_scale",
    "practical_band_factor",
    "practical_disagreement_target",
    "tolerance_power",
)


def parse_config(raw: dict) -> ExperimentConfig:
    """Validate a raw config dict; unknown keys and bad ranges are rejected."""
    _check_keys(
        raw,
        allowed=(
            "marginal",
            "noise",
            "learner",
            "schedule",
            "n_train",
            "n_eval",
            "epsilon",
            "delta",
            "seed",
            "w_star",
        ),
        required=("marginal", "noise", "seed"),
        where="config",
    )

    marg_raw = raw["marginal"]
    _check_keys(marg_raw, allowed=("kind", "d"), required=("kind", "d"), where="marginal")
    try:
        marginal = MarginalSpec(marg_raw["kind"], _as_int(marg_raw["d"], "marginal.d", 1))
    except ValueError as exc:
        raise ConfigError(f"marginal: {exc}") from exc

    noise_raw = raw["noise"]
    _check_keys(
        noise_raw,
        allowed=("kind", "nu", "budget", "rate_fn", "sigma", "strategy"),
        required=("kind",),
        where="noise",
    )
    try:
        noise = NoiseSpec(**noise_raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"noise: {exc}") from exc

    learner_raw = raw.get("learner", {"name": "averaging"})
    if not isinstance(learner_raw, dict) or "name" not in learner_raw:
        raise ConfigError("learner must be an object with a 'name' key")
    name = learner_raw["name"]
    if name not in LEARNER_NAMES:
        raise ConfigError(f"unknown learner {name!r}")
    defaults = _LEARNER_PARAMS[name]
    _check_keys(
        learner_raw,
        allowed=("name", *defaults),
        required=("name",),
        where=f"learner {name!r}",
    )
    params = dict(defaults)
    for key in defaults:
        if key in learner_raw:
            params[key] = learner_raw[key]
    for key in ("rep_cap", "quota", "hinge_iters", "degree"):
        if key in params:
            params[key] = _as_int(params[key], f"learner.{key}", 1)
    if name == "localize_poly_hinge":
        if params["nu"] is None:
            params["nu"] = noise.nu if noise.nu is not None else 0.0
        elif not isinstance(params["nu"], (int, float)) or not 0.0 <= params["nu"] < 0.5:
            raise ConfigError("learner.nu must lie in [0, 0.5)")

    sched_raw = raw.get("schedule", {})
    _check_keys(sched_raw, allowed=_SCHEDULE_KEYS, required=(), where="schedule")
    try:
        schedule = LocalizationSchedule(**sched_raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"schedule: {exc}") from exc

    n_train = _as_int(raw.get("n_train", 1000), "n_train", 0)
    n_eval = _as_int(raw.get("n_eval", 100_000), "n_eval", 1)
    epsilon = _as_fraction(raw.get("epsilon", 0.1), "epsilon")
    delta = _as_fraction(raw.get("delta", 0.1), "delta")
    seed = _as_int(raw.get("seed"), "seed", 0)

    w_star = raw.get("w_star", "random")
    if w_star != "random":
        if not isinstance(w_star, list) or len(w_star) != marginal.d:
            raise ConfigError(f"w_star must be \"random\" or a list of {marginal.d} numbers")
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in w_star):
            raise ConfigError("w_star entries must be numbers")

    return ExperimentConfig(
        marginal=marginal,
        noise=noise,
        learner=name,
        learner_params=params,
        schedule=schedule,
        n_train=n_train,
        n_eval=n_eval,
        epsilon=epsilon,
        delta=delta,
        seed=seed,
        w_star=w_star,
    )


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return parse_config(raw)


def resolve_w_star(config: ExperimentConfig) -> Hyperplane:
    if config.w_star == "random":
        return random_hyperplane(config.marginal.d, config.seed)
    return normalize(np.asarray(config.w_star, dtype=float))


def _model_dict(model) -> dict:
    if isinstance(model, Hyperplane):
        return {"kind": "halfspace", "d": model.d, "w": model.w.tolist()}
    if isinstance(model, PolyThreshold):
        return {
            "kind": "poly_threshold",
            "d": model.poly.d,
            "degree": model.poly.degree,
            "coeffs": model.poly.coefficients.tolist(),
            "theta": model.theta,
        }
    raise TypeError(f"cannot serialize model of type {type(model).__name__}")


def train_model(config: ExperimentConfig, w_star: Hyperplane):
    """Run the configured learner; returns (model, learner_info, rounds)."""
    sampler = LabeledSampler(config.marginal, w_star, config.noise, config.seed)
    params = config.learner_params
    info: dict = {}
    rounds: list = []

    if config.learner == "lp":
        model = train_lp_realizable(sampler.draw(config.n_train))
        if model is None:
            raise LearnerFailure("NoFeasibleSeparator: the training sample admits no consistent halfspace")
        return model, info, rounds

    if config.learner == "kearns_li":
        model = train_kearns_li(
            sampler,
            config.marginal.d,
            config.epsilon,
            config.delta,
            rep_cap=params["rep_cap"],
            diagnostics=info,
        )
        return model, info, rounds

    if config.learner == "averaging":
        return train_averaging(sampler.draw(config.n_train)), info, rounds

    if config.learner == "poly":
        return train_poly_regression(sampler.draw(config.n_train), params["degree"]), info, rounds

    warm = train_averaging(sampler.draw(config.n_train))
    schedule = config.schedule
    if config.learner == "localize_hinge":
        oracle = make_hinge_oracle(params["quota"], params["hinge_iters"], target=w_star)
    else:
        nu = float(params["nu"])
        excess_target = (1.0 - 2.0 * nu) * schedule.tolerance(schedule.disagreement_target)
        oracle = make_poly_hinge_oracle(
            params["quota"],
            params["degree"],
            nu,
            params["hinge_iters"],
            excess_target=excess_target,
            target=w_star,
        )
    model = localize(
        sampler,
        schedule,
        oracle,
        warm,
        config.epsilon,
        config.delta,
        w_star=w_star,
        diagnostics=rounds,
    )
    info["warm_start_angle"] = angle(warm, w_star)
    d = config.marginal.d
    c0 = schedule.disagreement_target
    for record in rounds:
        record["theoretical_quota_scale"] = d * d / (record["band_width"] * c0 * c0)
    return model, info, rounds


def run_experiment(config: ExperimentConfig) -> dict:
    """Train, evaluate, and assemble the reproducible experiment report."""
    started = time.perf_counter()
    w_star = resolve_w_star(config)
    model, learner_info, rounds = train_model(config, w_star)
    estimate = mc_error(
        model,
        config.marginal,
        w_star,
        config.noise,
        config.n_eval,
        derived_seed(config.seed, _EVAL_STREAM),
    )
    wall_ms = (time.perf_counter() - started) * 1000.0

    report = {
        "config": {
            "marginal": config.marginal.to_dict(),
            "noise": config.noise.to_dict(),
            "learner": {"name": config.learner, **{k: v for k, v in config.learner_params.items() if v is not None}},
            "n_train": config.n_train,
            "n_eval": config.n_eval,
            "epsilon": config.epsilon,
            "delta": config.delta,
            "seed": config.seed,
            "w_star": config.w_star if config.w_star == "random" else list(map(float, config.w_star)),
        },
        "resolved_w_star": w_star.w.tolist(),
        "schedule": config.schedule.to_dict(
            config.epsilon if config.learner.startswith("localize") else None
        ),
        "constants": {
            "version": __version__,
            "feasibility_slack": FEASIBILITY_SLACK,
            "pivot_tolerance": PIVOT_TOL,
            "l1_objective_tolerance": L1_OBJECTIVE_TOL,
            "hoeffding_confidence": 0.95,
        },
        "learner_info": learner_info,
        "model": _model_dict(model),
        "mc_error": estimate.to_dict(),
        "angle_to_w_star": angle(model, w_star) if isinstance(model, Hyperplane) else None,
        "localization_rounds": rounds,
        "wall_ms": wall_ms,
    }
    return report


def cmd_generate(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config = ExperimentConfig(**{**config.__dict__, "seed": args.seed})
    w_star = resolve_w_star(config)
    sampler = LabeledSampler(config.marginal, w_star, config.noise, config.seed)
    write_csv(sampler.draw(config.n_train), args.out)
    return EXIT_OK


def cmd_run(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config = ExperimentConfig(**{**config.__dict__, "seed": args.seed})
    report = run_experiment(config)
    text = jsonutil.dumps(report, indent=2)
    print(text)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    return EXIT_OK


def _broken_stub_sampler(d: int):
    """Test hook: anisotropic draws that violate the isotropic properties."""

    def sample(n, seed):
        X = sample_marginal(MarginalSpec("gaussian", d), n, seed).copy()
        X[:, 0] *= 1.6
        return X

    return sample


def cmd_properties(args) -> int:
    if args.marginal == "broken-stub":
        marginal = MarginalSpec("gaussian", args.d)
        report = check_logconcave_properties(
            marginal, args.n, args.seed, sample_fn=_broken_stub_sampler(args.d)
        )
    else:
        marginal = MarginalSpec(args.marginal, args.d)
        report = check_logconcave_properties(marginal, args.n, args.seed)
    text = report.to_json_lines()
    print(text)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    return EXIT_OK if report.all_pass else EXIT_PROPERTY


def _set_dotted(raw: dict, path: str, value):
    parts = path.split(".")
    node = raw
    for part in parts[:-1]:
        if part not in node or not isinstance(node[part], dict):
            raise ConfigError(f"sweep parameter path {path!r} does not name a config object")
        node = node[part]
    node[parts[-1]] = value


def _sweep_cell(base_raw: dict, param: str, value, seed: int, learner_raw: dict) -> dict:
    raw = copy.deepcopy(base_raw)
    _set_dotted(raw, param, value)
    raw["seed"] = seed
    raw["learner"] = copy.deepcopy(learner_raw)
    config = parse_config(raw)
    report = run_experiment(config)
    return {
        "sweep_value": value,
        "seed": seed,
        "learner": config.learner,
        "mc_error": report["mc_error"]["value"],
        "ci_radius": report["mc_error"]["ci_radius"],
        "angle": report["angle_to_w_star"],
        "wall_ms": report["wall_ms"],
    }


def cmd_sweep(args) -> int:
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict) or "sweep" not in raw:
        raise ConfigError("sweep config needs exactly one 'sweep' declaration")
    sweep = raw.pop("sweep")
    _check_keys(sweep, allowed=("param", "values"), required=("param", "values"), where="sweep")
    param = sweep["param"]
    values = sweep["values"]
    if not isinstance(param, str):
        raise ConfigError("exactly one sweep parameter must be named by a string path")
    if not isinstance(values, list) or not values:
        raise ConfigError("sweep.values must be a nonempty list")
    seeds = raw.pop("seeds", None)
    learners = raw.pop("learners", None)
    if seeds is None:
        seeds = [raw.get("seed", 0)]
    if not isinstance(seeds, list) or not all(isinstance(s, int) for s in seeds):
        raise ConfigError("seeds must be a list of integers")
    if learners is None:
        learners = [raw.get("learner", {"name": "averaging"})]
    if not isinstance(learners, list) or not learners:
        raise ConfigError("learners must be a nonempty list of learner objects")
    if args.seed is not None:
        raw["seed"] = args.seed
    raw.setdefault("seed", seeds[0])

    cells = [
        (vi, value, seed, learner)
        for vi, value in enumerate(values)
        for seed in seeds
        for learner in learners
    ]
    # Validate every cell's config before any training starts.
    for _, value, seed, learner in cells:
        cell_raw = copy.deepcopy(raw)
        _set_dotted(cell_raw, param, value)
        cell_raw["seed"] = seed
        cell_raw["learner"] = copy.deepcopy(learner)
        parse_config(cell_raw)

    def run_cell(cell):
        _, value, seed, learner = cell
        return _sweep_cell(raw, param, value, seed, learner)

    if args.threads and args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            rows = list(pool.map(run_cell, cells))
    else:
        rows = [run_cell(cell) for cell in cells]

    order = {id(cell): (cell[0], cell[2], cell[3].get("name", "")) for cell in cells}
    keyed = sorted(zip(cells, rows), key=lambda cr: order[id(cr[0])])
    lines = ["sweep_value,seed,learner,mc_error,ci_radius,angle,wall_ms"]
    for _, row in keyed:
        angle_txt = "" if row["angle"] is None else format(row["angle"], ".17g")
        lines.append(
            ",".join(
                [
                    str(row["sweep_value"]),
                    str(row["seed"]),
                    row["learner"],
                    format(row["mc_error"], ".17g"),
                    format(row["ci_radius"], ".17g"),
                    angle_txt,
                    format(row["wall_ms"], ".17g"),
                ]
            )
        )
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="noisyhalfspaces",
        description="Halfspace learning experiments under label noise on synthetic log-concave data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a dataset CSV from a config")
    gen.add_argument("--config", required=True)
    gen.add_argument("--out", required=True)
    gen.add_argument("--seed", type=int, default=None, help="override the config seed")
    gen.set_defaults(func=cmd_generate)

    run = sub.add_parser("run", help="train, evaluate, and report one experiment")
    run.add_argument("--config", required=True)
    run.add_argument("--out", default=None, help="also write the JSON report here")
    run.add_argument("--seed", type=int, default=None, help="override the config seed")
    run.set_defaults(func=cmd_run)

    props = sub.add_parser("properties", help="check distributional properties of a marginal")
    props.add_argument("--marginal", choices=("gaussian", "uniform_ball", "broken-stub"), default="gaussian")
    props.add_argument("--d", type=int, default=10)
    props.add_argument("--n", type=int, default=200_000)
    props.add_argument("--seed", type=int, default=0)
    props.add_argument("--out", default=None)
    props.set_defaults(func=cmd_properties)

    sweep = sub.add_parser("sweep", help="run a one-parameter sweep and write a CSV table")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--out", default=None)
    sweep.add_argument("--seed", type=int, default=None, help="override the base config seed")
    sweep.add_argument("--threads", type=int, default=1)
    sweep.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (
        LearnerFailure,
        NoCandidate,
        InsufficientBandSamples,
        ZeroVector,
        FeatureBlowup,
        NumericalBreakdown,
    ) as exc:
        print(f"learner error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_LEARNER
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
