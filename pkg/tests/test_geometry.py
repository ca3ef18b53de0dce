import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from noisyhalfspaces.geometry import (
    ConeCap,
    DimensionMismatch,
    Hyperplane,
    ZeroVector,
    angle,
    classify,
    classify_batch,
    in_band,
    normalize,
    project_cone_cap,
)
from conftest import cone_cap_grid


def unit(*coords):
    return Hyperplane(np.asarray(coords, dtype=float))


def test_normalize_scaling():
    assert np.allclose(normalize([3.0, 4.0]).w, [0.6, 0.8])


def test_normalize_already_unit():
    assert np.allclose(normalize([1.0, 0.0, 0.0]).w, [1.0, 0.0, 0.0])


def test_normalize_zero_vector():
    with pytest.raises(ZeroVector):
        normalize([0.0, 0.0])
    with pytest.raises(ZeroVector):
        normalize([1e-13, 0.0])


def test_hyperplane_requires_unit_norm():
    with pytest.raises(ValueError):
        Hyperplane(np.array([1.0, 1.0]))


def test_angle_examples():
    e1, e2 = unit(1, 0), unit(0, 1)
    assert angle(e1, e1) == 0.0
    assert angle(e1, e2) == pytest.approx(np.pi / 2)
    assert angle(unit(1, 0), unit(-1, 0)) == pytest.approx(np.pi)


def test_angle_stable_near_parallel():
    w = normalize([1.0, 1e-9])
    assert angle(unit(1, 0), w) == pytest.approx(1e-9, rel=1e-3)


def test_angle_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        angle(unit(1, 0), unit(1, 0, 0))


def test_angle_properties_random_triples():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        u, v, w = (normalize(rng.standard_normal(4)) for _ in range(3))
        assert angle(u, v) == pytest.approx(angle(v, u), abs=1e-9)
        assert angle(u, u) == 0.0
        assert angle(u, w) <= angle(u, v) + angle(v, w) + 1e-9


def test_classify_examples():
    e1 = unit(1, 0)
    assert classify(e1, [2.0, 5.0]) == 1
    assert classify(e1, [-0.1, 9.0]) == -1
    assert classify(e1, [0.0, 3.0]) == 1  # tie rule


def test_classify_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        classify(unit(1, 0), [1.0, 2.0, 3.0])


@given(st.floats(min_value=1e-6, max_value=1e6))
@settings(max_examples=50, deadline=None)
def test_classify_scale_invariant(scale):
    rng = np.random.default_rng(11)
    w = normalize(rng.standard_normal(5))
    X = rng.standard_normal((64, 5))
    assert np.array_equal(classify_batch(w, X), classify_batch(w, scale * X))


def test_in_band_examples():
    e1 = unit(1, 0)
    assert in_band([0.05, 1.0], e1, 0.1)
    assert not in_band([0.2, 0.0], e1, 0.1)
    assert in_band([0.1, -3.0], e1, 0.1)  # closed band boundary


def test_project_interior_point_fixed():
    cone = ConeCap(unit(1, 0), np.pi / 4)
    assert np.allclose(project_cone_cap([0.5, 0.0], cone), [0.5, 0.0])


def test_project_norm_clipped_on_axis():
    cone = ConeCap(unit(1, 0), np.pi / 4)
    assert np.allclose(project_cone_cap([2.0, 0.0], cone), [1.0, 0.0])


def test_project_boundary_ray_closed_form():
    cone = ConeCap(unit(1, 0), np.pi / 4)
    assert np.allclose(project_cone_cap([0.0, 1.0], cone), [0.5, 0.5], atol=1e-9)


def test_project_antipodal_to_zero():
    cone = ConeCap(unit(1, 0), np.pi / 4)
    assert np.allclose(project_cone_cap([-1.0, 0.0], cone), [0.0, 0.0])


def test_project_idempotent():
    rng = np.random.default_rng(3)
    cone = ConeCap(normalize(rng.standard_normal(6)), 0.7)
    for _ in range(200):
        p = project_cone_cap(rng.standard_normal(6) * 2.0, cone)
        again = project_cone_cap(p, cone)
        assert np.linalg.norm(again - p) <= 1e-7


@pytest.mark.parametrize("d", [2, 3])
def test_project_matches_grid_oracle(d):
    rng = np.random.default_rng(5)
    for _ in range(40):
        axis = normalize(rng.standard_normal(d))
        half_angle = rng.uniform(0.1, np.pi / 2)
        cone = ConeCap(axis, half_angle)
        v = rng.standard_normal(d) * rng.uniform(0.2, 3.0)
        p = project_cone_cap(v, cone)
        grid = cone_cap_grid(axis.w, half_angle)
        best = np.min(np.linalg.norm(grid - v, axis=1))
        assert np.linalg.norm(p - v) <= best + 1e-4
