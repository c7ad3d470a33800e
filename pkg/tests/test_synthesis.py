import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from polqubit.core import RHO_D, RHO_H, RHO_MIXED, RHO_R, fidelity, poincare_from_rho, rho_from_poincare
from polqubit.optics import DEFAULT_SPECTRUM, coherence_length
from polqubit.synthesis import (
    RetardanceErrors,
    UnreachableStateError,
    forward_pipeline,
    intermediate_decomposition,
    synth_angles,
    synth_angles_imperfect,
)

from conftest import ball_points, random_states, sphere_points

DEG = np.pi / 180


def test_synth_examples():
    assert synth_angles(RHO_H) == pytest.approx((0, 0, 0))
    assert synth_angles(RHO_MIXED) == pytest.approx((22.5 * DEG, 0, 0))
    assert synth_angles(RHO_D) == pytest.approx((0, 22.5 * DEG, 45 * DEG))


def test_forward_examples():
    assert np.allclose(forward_pipeline((0, 0, 0), opd=0.0), RHO_H)
    assert np.allclose(forward_pipeline((0, 0, 0)), RHO_H)
    assert np.allclose(forward_pipeline((22.5 * DEG, 0.3, 1.1)), RHO_MIXED, atol=1e-12)


def test_round_trip_random_ball(rng):
    for rho in random_states(rng, 1000):
        angles = synth_angles(rho)
        assert 0 <= angles.theta1 <= np.pi / 8 + 1e-15
        assert fidelity(forward_pipeline(angles), rho) >= 1 - 1e-10


def test_round_trip_circular_poles():
    for r in ((0, 0, 1), (0, 0, -1), (0, 0, 0.4), (-1, 0, 0), (0, -1, 0)):
        rho = rho_from_poincare(r)
        assert fidelity(forward_pipeline(synth_angles(rho)), rho) >= 1 - 1e-10


@given(st.floats(0, np.pi / 8))
def test_intermediate_decomposition(theta1):
    pure, mixed = intermediate_decomposition(theta1)
    assert pure + mixed == pytest.approx(1.0, abs=1e-12)
    r = poincare_from_rho(forward_pipeline((theta1, 0, 0)))
    assert np.linalg.norm(r) == pytest.approx(abs(np.cos(4 * theta1)), abs=1e-12)


def test_intermediate_decomposition_examples():
    assert intermediate_decomposition(0) == pytest.approx((1, 0))
    assert intermediate_decomposition(22.5 * DEG) == pytest.approx((0, 1), abs=1e-12)
    assert intermediate_decomposition(15 * DEG) == pytest.approx((0.5, 0.5))


@given(st.floats(0, np.pi / 8), st.floats(-np.pi, np.pi), st.floats(-np.pi, np.pi))
def test_unitaries_preserve_degree_of_polarization(t1, t2, t3):
    r = np.linalg.norm(poincare_from_rho(forward_pipeline((t1, t2, t3))))
    assert r == pytest.approx(abs(np.cos(4 * t1)), abs=1e-12)


def test_partial_decoherence_keeps_some_coherence():
    lc = coherence_length(DEFAULT_SPECTRUM)
    out = forward_pipeline((np.pi / 16, 0, 0), opd=0.5 * lc)
    assert np.linalg.norm(poincare_from_rho(out)) > np.cos(np.pi / 4) + 1e-3


def test_imperfect_zero_errors_matches_ideal():
    errs = RetardanceErrors(0.0, 0.0)
    angles = synth_angles_imperfect(RHO_D, errs)
    assert fidelity(forward_pipeline(angles, errors=errs), RHO_D) > 1 - 1e-8


def test_imperfect_reaches_circular():
    errs = RetardanceErrors(0.02, 0.01)
    assert errs.reachability_guaranteed
    angles = synth_angles_imperfect(RHO_R, errs)
    assert 1 - fidelity(forward_pipeline(angles, errors=errs), RHO_R) < 1e-8


def test_imperfect_random_pure_targets(rng):
    errs = RetardanceErrors(0.02, 0.01)
    for r in sphere_points(rng, 200):
        rho = rho_from_poincare(r)
        angles = synth_angles_imperfect(rho, errs)
        assert 1 - fidelity(forward_pipeline(angles, errors=errs), rho) < 1e-8


def test_imperfect_unreachable_is_reported():
    # a QWP far from quarter-wave cannot reach the circular pole
    errs = RetardanceErrors(0.0, 0.6)
    with pytest.raises(UnreachableStateError) as info:
        synth_angles_imperfect(RHO_R, errs, restarts=2)
    assert info.value.infidelity > 1e-8
