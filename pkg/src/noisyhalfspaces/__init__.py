"""Noise-robust halfspace learning on synthetic log-concave data."""

from .geometry import ConeCap, DimensionMismatch, Hyperplane, ZeroVector, angle, classify, in_band, normalize, project_cone_cap
from .synthdata import Dataset, LabeledSample, LabeledSampler, MarginalSpec, NoiseSpec, sample_marginal
from .solvers import HingeProblem, LinearConstraintSystem, NumericalBreakdown, l1_fit, lp_feasible, minimize_hinge
from .learners import (
    FeatureBlowup,
    InsufficientBandSamples,
    LocalizationSchedule,
    NoCandidate,
    PolyThreshold,
    Polynomial,
    band_oracle_hinge,
    band_oracle_poly_hinge,
    expand_monomials,
    localize,
    realizable_sample_bound,
    repeat_and_validate,
    select_threshold,
    train_averaging,
    train_kearns_li,
    train_lp_realizable,
    train_poly_regression,
)
from .evaluation import ErrorEstimate, PropertyReport, check_excess_sandwich, check_logconcave_properties, disagreement, empirical_error, mc_error

__version__ = "0.1.0"
