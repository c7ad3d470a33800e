"""Waveplate settings that prepare an arbitrary qubit state from |H>.

Pipeline: HWP(theta1) -> H/V decoherer -> HWP(theta2) -> QWP(theta3).
"""
from __future__ import annotations

import itertools
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize

from .core import RHO_H, poincare_from_rho, qubit_fidelity
from .optics import (
    DEFAULT_SPECTRUM,
    FULL_DECOHERENCE_LENGTHS,
    Spectrum,
    coherence_length,
    decoherence_factor,
    general_waveplate,
    hwp,
    qwp,
)

__all__ = [
    "SynthesisAngles",
    "RetardanceErrors",
    "UnreachableStateError",
    "synth_angles",
    "forward_pipeline",
    "intermediate_decomposition",
    "synth_angles_imperfect",
    "default_opd",
]


class SynthesisAngles(NamedTuple):
    theta1: float
    theta2: float
    theta3: float


class RetardanceErrors(NamedTuple):
    """Deviations of the HWP and QWP retardances from pi and pi/2."""

    hwp_error: float = 0.0
    qwp_error: float = 0.0

    @property
    def reachability_guaranteed(self) -> bool:
        return abs(self.qwp_error) < abs(self.hwp_error) or (self.hwp_error == self.qwp_error == 0)


class UnreachableStateError(RuntimeError):
    """The numeric search could not reach the target with the given retardance errors."""

    def __init__(self, infidelity: float, angles: SynthesisAngles):
        super().__init__(f"best infidelity {infidelity:.3g} above threshold")
        self.infidelity = infidelity
        self.angles = angles


def default_opd(spec: Spectrum = DEFAULT_SPECTRUM) -> float:
    """Decoherer path difference long enough to remove all H/V coherence."""
    return FULL_DECOHERENCE_LENGTHS * coherence_length(spec)


def synth_angles(target) -> SynthesisAngles:
    """Closed-form waveplate angles for ``target``.

    theta1 sets the degree of polarization, theta3 the azimuth and theta2 the
    azimuth plus ellipticity. Degenerate directions resolve to zero angles.
    """
    r_h, r_d, r_r = poincare_from_rho(target)
    norm = np.sqrt(r_h**2 + r_d**2 + r_r**2)
    theta1 = 0.25 * np.arccos(min(norm, 1.0))
    if norm < 1e-15:
        return SynthesisAngles(float(theta1), 0.0, 0.0)
    azimuth = np.arctan2(r_d, r_h)
    # Circular term enters with a minus sign for this package's r_R convention.
    ellipticity = np.arctan2(r_r, np.hypot(r_h, r_d))
    return SynthesisAngles(float(theta1), float(0.25 * (azimuth - ellipticity)), float(0.5 * azimuth))


def forward_pipeline(
    angles,
    spec: Spectrum = DEFAULT_SPECTRUM,
    opd: float | None = None,
    errors: RetardanceErrors | None = None,
) -> np.ndarray:
    """Simulate the preparation optics acting on |H>.

    ``opd=None`` uses :func:`default_opd` (full decoherence). With ``errors``
    the waveplates are modeled by :func:`general_waveplate` with the given
    retardance deviations.
    """
    if opd is None:
        opd = default_opd(spec)
    return _forward(angles, decoherence_factor(spec, opd), errors)


def _forward(angles, gamma: complex, errors: RetardanceErrors | None) -> np.ndarray:
    t1, t2, t3 = angles
    if errors is None:
        h1, h2, q3 = hwp(t1), hwp(t2), qwp(t3)
    else:
        h1 = general_waveplate(np.pi + errors.hwp_error, t1)
        h2 = general_waveplate(np.pi + errors.hwp_error, t2)
        q3 = general_waveplate(0.5 * np.pi + errors.qwp_error, t3)
    rho = h1 @ RHO_H @ h1.conj().T
    rho[0, 1] *= gamma
    rho[1, 0] *= np.conj(gamma)
    u = q3 @ h2
    return u @ rho @ u.conj().T


def intermediate_decomposition(theta1: float) -> tuple[float, float]:
    """Weights of |H><H| and of I/2 in the state leaving the decoherer."""
    return float(np.cos(4 * theta1)), float(2 * np.sin(2 * theta1) ** 2)


def synth_angles_imperfect(
    target,
    errors: RetardanceErrors,
    spec: Spectrum = DEFAULT_SPECTRUM,
    opd: float | None = None,
    *,
    threshold: float = 1e-8,
    restarts: int = 8,
    max_evals: int = 2000,
) -> SynthesisAngles:
    """Numerically search waveplate angles for retarders with retardance errors.

    Runs Nelder-Mead from the ``restarts`` best points of a coarse angle grid,
    seeded first with the ideal closed-form solution, and stops as soon as the
    infidelity drops below ``threshold``.
    """
    target = np.asarray(target, dtype=complex)
    if opd is None:
        opd = default_opd(spec)

    gamma = decoherence_factor(spec, opd)

    def infidelity(x):
        return 1.0 - qubit_fidelity(_forward(x, gamma, errors), target)

    def starts():
        yield np.array(synth_angles(target))
        grid1 = np.linspace(0, np.pi / 4, 5)
        grid23 = np.linspace(0, np.pi, 6, endpoint=False)
        coarse = sorted(
            ((infidelity(p), p) for p in itertools.product(grid1, grid23, grid23)),
            key=lambda item: item[0],
        )
        for _, p in coarse[: restarts - 1]:
            yield np.array(p)

    best_x = np.array(synth_angles(target))
    best_f = infidelity(best_x)
    for x0 in starts():
        res = minimize(
            infidelity,
            x0,
            method="Nelder-Mead",
            options={"xatol": 1e-7, "fatol": 1e-14, "maxfev": max_evals, "initial_simplex": _simplex(x0)},
        )
        if res.fun < best_f:
            best_x, best_f = res.x, float(res.fun)
        if best_f < threshold:
            break
    angles = SynthesisAngles(*(float(a) for a in best_x))
    if best_f >= threshold:
        raise UnreachableStateError(best_f, angles)
    return angles


def _simplex(x0: np.ndarray, step: float = 0.05) -> np.ndarray:
    return np.vstack([x0] + [x0 + step * e for e in np.eye(len(x0))])
