"""Single-qubit polarization states: density matrices, Poincare vectors, metrics.

Conventions used throughout the package::

    rho = [[(1 + r_H)/2,          (r_D + 1j*r_R)/2],
           [(r_D - 1j*r_R)/2,     (1 - r_H)/2     ]]

so that ``A = rho[0, 0]`` and ``B*exp(1j*delta) = rho[0, 1]`` with
``r_H = 2A - 1``, ``r_D = 2B cos(delta)``, ``r_R = 2B sin(delta)``.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

__all__ = [
    "PhysicalityError",
    "PoincareVector",
    "ABDelta",
    "RHO_H",
    "RHO_V",
    "RHO_D",
    "RHO_A",
    "RHO_R",
    "RHO_L",
    "RHO_MIXED",
    "check_density_matrix",
    "rho_from_poincare",
    "poincare_from_rho",
    "rho_from_abdelta",
    "abdelta_from_rho",
    "fidelity",
    "qubit_fidelity",
    "uhlmann_fidelity",
    "purity",
    "trace_distance",
    "pure_state",
]

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-12
# Inputs slightly outside the unit ball from float round-off are accepted.
BALL_TOL = 1e-9


class PhysicalityError(ValueError):
    """Raised when a state or operator violates a physical constraint."""


class PoincareVector(NamedTuple):
    r_H: float
    r_D: float
    r_R: float

    @property
    def norm(self) -> float:
        return float(np.sqrt(self.r_H**2 + self.r_D**2 + self.r_R**2))

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=float)


class ABDelta(NamedTuple):
    """The (A, B, delta) parametrization of a qubit density matrix."""

    A: float
    B: float
    delta: float


def check_density_matrix(rho, tol: float = PSD_TOL) -> np.ndarray:
    """Validate and return ``rho`` as a 2x2 complex array.

    Raises :class:`PhysicalityError` if it is not Hermitian, trace one and
    positive semidefinite within ``tol``.
    """
    m = np.asarray(rho, dtype=complex)
    if m.shape != (2, 2):
        raise PhysicalityError(f"density matrix must be 2x2, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise PhysicalityError("density matrix has non-finite entries")
    if np.max(np.abs(m - m.conj().T)) > max(tol, HERMITIAN_TOL):
        raise PhysicalityError("density matrix is not Hermitian")
    if abs(np.trace(m) - 1.0) > max(tol, TRACE_TOL):
        raise PhysicalityError(f"density matrix trace is {np.trace(m).real:.6g}, not 1")
    if np.linalg.eigvalsh(m).min() < -max(tol, PSD_TOL):
        raise PhysicalityError("density matrix is not positive semidefinite")
    return m


def rho_from_poincare(r) -> np.ndarray:
    r_h, r_d, r_r = (float(x) for x in r)
    if r_h**2 + r_d**2 + r_r**2 > (1.0 + BALL_TOL) ** 2:
        raise PhysicalityError(f"|r| = {np.sqrt(r_h**2 + r_d**2 + r_r**2):.6g} > 1 is unphysical")
    return 0.5 * np.array(
        [[1.0 + r_h, r_d + 1j * r_r], [r_d - 1j * r_r, 1.0 - r_h]], dtype=complex
    )


def poincare_from_rho(rho) -> PoincareVector:
    m = np.asarray(rho, dtype=complex)
    return PoincareVector(
        float((m[0, 0] - m[1, 1]).real),
        float(2.0 * m[0, 1].real),
        float(2.0 * m[0, 1].imag),
    )


def rho_from_abdelta(p) -> np.ndarray:
    a, b, delta = (float(x) for x in p)
    if not 0.0 <= a <= 1.0:
        raise PhysicalityError(f"A = {a} outside [0, 1]")
    if b < 0.0:
        raise PhysicalityError(f"B = {b} must be nonnegative")
    if b > np.sqrt(a * (1.0 - a)) + 1e-12:
        raise PhysicalityError(f"B = {b} exceeds sqrt(A(1-A)) = {np.sqrt(a * (1 - a)):.6g}")
    off = b * np.exp(1j * delta)
    return np.array([[a, off], [np.conj(off), 1.0 - a]], dtype=complex)


def abdelta_from_rho(rho) -> ABDelta:
    m = np.asarray(rho, dtype=complex)
    off = m[0, 1]
    delta = float(np.angle(off)) if abs(off) > 0 else 0.0
    if delta >= np.pi:
        delta -= 2 * np.pi
    return ABDelta(float(m[0, 0].real), float(abs(off)), delta)


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    w = np.sqrt(np.clip(w, 0.0, None))
    return (v * w) @ v.conj().T


def uhlmann_fidelity(rho1, rho2) -> float:
    """``|Tr sqrt(sqrt(rho1) rho2 sqrt(rho1))|**2`` via eigendecompositions.

    Works for any dimension, but round-off of order 1e-16 in a zero
    eigenvalue becomes 1e-8 after the square root, so pure inputs lose
    about half the digits.
    """
    a = np.asarray(rho1, dtype=complex)
    b = np.asarray(rho2, dtype=complex)
    s = _psd_sqrt(a)
    m = s @ b @ s
    w = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
    f = float(np.sum(np.sqrt(np.clip(w, 0.0, None))) ** 2)
    return min(max(f, 0.0), 1.0)


def qubit_fidelity(rho1, rho2) -> float:
    """Closed-form 2x2 fidelity ``Tr(rho1 rho2) + 2 sqrt(det rho1 det rho2)``.

    Negative determinants from round-off are clamped to zero.
    """
    a = np.asarray(rho1, dtype=complex)
    b = np.asarray(rho2, dtype=complex)
    overlap = float(np.real(np.sum(a * b.T)))
    dets = max(float(np.linalg.det(a).real), 0.0) * max(float(np.linalg.det(b).real), 0.0)
    return min(max(overlap + 2.0 * np.sqrt(dets), 0.0), 1.0)


def fidelity(rho1, rho2) -> float:
    """State overlap ``|Tr sqrt(sqrt(rho1) rho2 sqrt(rho1))|**2``, in [0, 1].

    Qubit inputs use the exact closed form, which keeps full precision for
    pure states; larger matrices fall back to :func:`uhlmann_fidelity`.
    """
    if np.shape(rho1) == (2, 2) and np.shape(rho2) == (2, 2):
        return qubit_fidelity(rho1, rho2)
    return uhlmann_fidelity(rho1, rho2)


def purity(rho) -> float:
    m = np.asarray(rho, dtype=complex)
    return float(np.real(np.sum(m * m.T)))


def trace_distance(rho1, rho2) -> float:
    d = np.asarray(rho1, dtype=complex) - np.asarray(rho2, dtype=complex)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (d + d.conj().T)))))


def pure_state(psi) -> np.ndarray:
    """Projector onto the normalized ket ``psi``."""
    v = np.asarray(psi, dtype=complex).reshape(2)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


RHO_H = rho_from_poincare((1, 0, 0))
RHO_V = rho_from_poincare((-1, 0, 0))
RHO_D = rho_from_poincare((0, 1, 0))
RHO_A = rho_from_poincare((0, -1, 0))
RHO_R = rho_from_poincare((0, 0, 1))
RHO_L = rho_from_poincare((0, 0, -1))
RHO_MIXED = rho_from_poincare((0, 0, 0))
