import numpy as np
import pytest
from scipy import stats

from polqubit.core import rho_from_poincare
from polqubit.counting import NO_DRIFT
from polqubit.distinguish import (
    DEFAULT_DIRECTION,
    ELLIPSOID_SCALE,
    InsufficientTrialsError,
    UncertaintyEllipsoid,
    count_distinguishable,
    ellipsoid_at,
    ellipsoid_from_points,
    ellipsoid_profile,
)


def sphere(radius, r=(0, 0, 0)):
    return UncertaintyEllipsoid(np.array(r, float), radius, (radius, radius), np.eye(3))


def test_axes_are_orthonormal():
    e = ellipsoid_at(rho_from_poincare(0.5 * DEFAULT_DIRECTION), 10, 300_000, 0)
    assert np.allclose(e.axes_directions @ e.axes_directions.T, np.eye(3), atol=1e-10)
    assert np.allclose(e.axes_directions[0], e.mean_r / np.linalg.norm(e.mean_r))
    assert e.radial_semiaxis > 0 and min(e.transverse_semiaxes) > 0


def test_noiseless_mode_has_zero_size():
    e = ellipsoid_at(rho_from_poincare((0.3, 0.2, 0.1)), 5, 300_000, 0, exact_expectation=True)
    assert e.radial_semiaxis < 1e-8 and max(e.transverse_semiaxes) < 1e-8


def test_center_state_defaults_radial_to_x():
    pts = np.random.default_rng(0).normal(scale=1e-8, size=(10, 3))
    pts -= pts.mean(axis=0)
    e = ellipsoid_from_points(pts)
    assert np.allclose(e.axes_directions[0], (1, 0, 0))


def test_requires_trials():
    with pytest.raises(ValueError):
        ellipsoid_at(rho_from_poincare((0, 0, 0)), 2, 1000, 0)
    with pytest.raises(InsufficientTrialsError):
        ellipsoid_from_points(np.zeros((2, 3)))


def test_profile_radii_and_determinism():
    a = ellipsoid_profile(seed=4)
    b = ellipsoid_profile(seed=4)
    assert len(a) == 5
    assert [e.radial_semiaxis for e in a] == [e.radial_semiaxis for e in b]
    assert np.allclose([e.radius for e in a][1:], [0.25, 0.5, 0.75, 1.0], atol=0.02)


def test_scaling_with_counts():
    # oracle: standard errors scale as 1/sqrt(N)
    rho = rho_from_poincare(0.5 * DEFAULT_DIRECTION)
    small = ellipsoid_at(rho, 400, 1e5, 1, drift=NO_DRIFT)
    large = ellipsoid_at(rho, 400, 4e5, 2, drift=NO_DRIFT)
    ratio = np.array([large.radial_semiaxis, *large.transverse_semiaxes]) / np.array(
        [small.radial_semiaxis, *small.transverse_semiaxes]
    )
    assert np.all(np.abs(ratio - 0.5) < 0.1)


def _coverage():
    from polqubit.distinguish import reconstruct_trials

    rho = rho_from_poincare(0.5 * DEFAULT_DIRECTION)
    pts = reconstruct_trials(rho, 500, 300_000, 3)
    e = ellipsoid_from_points(pts)
    local = (pts - e.mean_r) @ e.axes_directions.T
    semi = np.array([e.radial_semiaxis, *e.transverse_semiaxes])
    joint = np.mean(np.sum((local / semi) ** 2, axis=1) <= 1.0)
    per_axis = (np.abs(local) <= semi).mean(axis=0)
    return joint, per_axis


def test_ellipsoid_coverage_matches_gaussian_oracle():
    # oracle: chi-square with 3 dof for the joint ellipsoid, normal cdf per axis
    joint, per_axis = _coverage()
    assert ELLIPSOID_SCALE == 1.69
    assert abs(joint - stats.chi2.cdf(1.69**2, 3)) < 0.06
    assert np.all(np.abs(per_axis - (2 * stats.norm.cdf(1.69) - 1)) < 0.04)


@pytest.mark.xfail(strict=True, reason="a 1.69 sigma ellipsoid holds about 59% of a 3-D gaussian, not 93%")
def test_ellipsoid_contains_93_percent():
    joint, _ = _coverage()
    assert joint >= 0.93


def test_count_constant_volume():
    prof = [sphere(0.01, (0, 0, 0)), sphere(0.01, (1, 0, 0))]
    v0 = 4 / 3 * np.pi * 1e-6
    est = count_distinguishable(prof, 1.0)
    assert est.total_states == pytest.approx(4 / 3 * np.pi / v0, rel=1e-3)
    assert count_distinguishable(prof, 1.0, "mean_volume").total_states == pytest.approx(4 / 3 * np.pi / v0)


def test_count_monotone():
    small = [sphere(0.01, (0, 0, 0)), sphere(0.01, (1, 0, 0))]
    big = [sphere(0.02, (0, 0, 0)), sphere(0.01, (1, 0, 0))]
    assert count_distinguishable(big).total_states < count_distinguishable(small).total_states


def test_count_validation():
    with pytest.raises(ValueError):
        count_distinguishable([sphere(0.01)])
    with pytest.raises(ValueError):
        count_distinguishable([sphere(0.01), sphere(0.01, (1, 0, 0))], 0.0)
    with pytest.raises(ValueError):
        count_distinguishable([sphere(0.01), sphere(0.01, (1, 0, 0))], method="guess")


def random_sequential_packing(radius, attempts, rng):
    """Monte-Carlo oracle: drop non-overlapping balls of ``radius`` into the unit ball."""
    from scipy.spatial import cKDTree

    centers = []
    tree = None
    batch = rng.uniform(-1, 1, size=(attempts, 3))
    batch = batch[np.sum(batch**2, axis=1) <= 1]
    pending = []
    for p in batch:
        if tree is not None and tree.query_ball_point(p, 2 * radius):
            continue
        if any(np.sum((q - p) ** 2) < 4 * radius**2 for q in pending):
            continue
        pending.append(p)
        if len(pending) >= 512:
            centers.extend(pending)
            pending = []
            tree = cKDTree(np.array(centers))
    centers.extend(pending)
    return len(centers)


def test_count_against_monte_carlo_packing():
    radius = 0.08
    prof = [sphere(radius, (0, 0, 0)), sphere(radius, (1, 0, 0))]
    est = count_distinguishable(prof, 0.74).total_states
    mc = random_sequential_packing(radius, 400_000, np.random.default_rng(0))
    assert 0.5 <= est / mc <= 2.0
