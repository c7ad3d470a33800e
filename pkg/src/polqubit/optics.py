"""Jones operators for waveplates and polarizers, and the birefringent decoherer.

Angles are in radians. Lengths are in meters.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT

from .core import PhysicalityError

__all__ = [
    "Spectrum",
    "DecohererSpec",
    "DEFAULT_SPECTRUM",
    "hwp",
    "qwp",
    "general_waveplate",
    "is_unitary",
    "apply_unitary",
    "apply_operator",
    "decoherence_factor",
    "tabulated_decoherence_factor",
    "coherence_length",
    "decohere",
    "coherent_partial_polarizer",
    "brewster_stack_transmission",
    "rotation_to_basis",
    "FULL_DECOHERENCE_LENGTHS",
]

_I2 = np.eye(2, dtype=complex)

# An opd of this many coherence lengths leaves |gamma| far below double precision.
FULL_DECOHERENCE_LENGTHS = 20.0

_FWHM_TO_SIGMA = 1.0 / (2.0 * np.sqrt(2.0 * np.log(2.0)))


@dataclass(frozen=True)
class Spectrum:
    """Photon power spectrum, gaussian in angular frequency.

    The wavelength FWHM is converted to an angular-frequency FWHM using the
    exact band edges ``lambda0 +/- fwhm/2``.
    """

    center_wavelength: float
    fwhm_wavelength: float
    shape: str = "gaussian"

    def __post_init__(self):
        if self.shape != "gaussian":
            raise ValueError(f"unsupported spectral shape {self.shape!r}")
        if not 0.0 < self.fwhm_wavelength < self.center_wavelength:
            raise ValueError("need 0 < fwhm_wavelength < center_wavelength")

    @property
    def center_omega(self) -> float:
        return 2.0 * np.pi * SPEED_OF_LIGHT / self.center_wavelength

    @property
    def fwhm_omega(self) -> float:
        lam, dlam = self.center_wavelength, self.fwhm_wavelength
        return 2.0 * np.pi * SPEED_OF_LIGHT * dlam / (lam**2 - 0.25 * dlam**2)

    @property
    def sigma_omega(self) -> float:
        return self.fwhm_omega * _FWHM_TO_SIGMA

    def density(self, omega) -> np.ndarray:
        """Normalized ``|A(omega)|**2``; integrates to one over omega."""
        s = self.sigma_omega
        x = (np.asarray(omega, dtype=float) - self.center_omega) / s
        return np.exp(-0.5 * x**2) / (s * np.sqrt(2.0 * np.pi))


DEFAULT_SPECTRUM = Spectrum(702e-9, 10e-9)


@dataclass(frozen=True)
class DecohererSpec:
    """Birefringent decoherer.

    ``basis_rotation`` maps lab-frame amplitudes into the decoherer eigenbasis;
    the identity gives an H-V decoherer.
    """

    optical_path_difference: float
    basis_rotation: np.ndarray = field(default_factory=lambda: _I2.copy())

    def __post_init__(self):
        if self.optical_path_difference < 0:
            raise ValueError("optical_path_difference must be >= 0")
        u = np.asarray(self.basis_rotation, dtype=complex)
        if not is_unitary(u, 1e-10):
            raise PhysicalityError("decoherer basis_rotation must be unitary")
        object.__setattr__(self, "basis_rotation", u)


def hwp(theta: float) -> np.ndarray:
    c, s = np.cos(2 * theta), np.sin(2 * theta)
    return np.array([[-c, -s], [-s, c]], dtype=complex)


def qwp(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    k = 1 + 1j
    return np.array([[1 - k * c * c, -k * s * c], [-k * s * c, 1 - k * s * s]], dtype=complex)


def general_waveplate(retardance: float, theta: float) -> np.ndarray:
    """Retarder with phase ``retardance`` between its axes, optic axis at ``theta``.

    The axis component picks up ``exp(-i*retardance/2)`` and the orthogonal one
    ``exp(+i*retardance/2)``, matching :func:`hwp` and :func:`qwp` up to a
    global phase.
    """
    c, s = np.cos(theta), np.sin(theta)
    rot = np.array([[c, -s], [s, c]], dtype=complex)
    core = np.diag([np.exp(-0.5j * retardance), np.exp(0.5j * retardance)])
    return rot @ core @ rot.T


def is_unitary(op, tol: float = 1e-10) -> bool:
    u = np.asarray(op, dtype=complex)
    return u.shape == (2, 2) and bool(np.max(np.abs(u.conj().T @ u - _I2)) <= tol)


def apply_unitary(op, rho) -> np.ndarray:
    u = np.asarray(op, dtype=complex)
    if not is_unitary(u, 1e-10):
        raise PhysicalityError("operator is not unitary; use process.apply_kraus")
    return u @ np.asarray(rho, dtype=complex) @ u.conj().T


def apply_operator(op, rho) -> tuple[np.ndarray, float]:
    """Apply a (possibly lossy) Jones operator; return renormalized state and survival weight."""
    e = np.asarray(op, dtype=complex)
    raw = e @ np.asarray(rho, dtype=complex) @ e.conj().T
    w = float(np.trace(raw).real)
    if w < 1e-12:
        return raw, w
    return raw / w, w


def decoherence_factor(spec: Spectrum, opd: float) -> complex:
    """Complex coherence ``integral |A(w)|^2 exp(i w opd/c) dw`` for a gaussian spectrum."""
    if opd < 0:
        raise ValueError("opd must be >= 0")
    tau = opd / SPEED_OF_LIGHT
    envelope = np.exp(-0.5 * (spec.sigma_omega * tau) ** 2)
    return complex(envelope * np.exp(1j * spec.center_omega * tau))


def tabulated_decoherence_factor(omega, density, opd: float) -> complex:
    """Trapezoidal quadrature of the coherence integral for a tabulated spectrum.

    ``density`` is normalized to unit area on the ``omega`` grid before use.
    """
    w = np.asarray(omega, dtype=float)
    d = np.asarray(density, dtype=float)
    norm = np.trapezoid(d, w)
    phase = np.exp(1j * w * (opd / SPEED_OF_LIGHT))
    return complex(np.trapezoid(d * phase, w) / norm)


def coherence_length(spec: Spectrum) -> float:
    return 2.0 * np.pi * SPEED_OF_LIGHT / spec.fwhm_omega


def decohere(rho, spec: Spectrum, d: DecohererSpec) -> np.ndarray:
    b = d.basis_rotation
    m = b @ np.asarray(rho, dtype=complex) @ b.conj().T
    g = decoherence_factor(spec, d.optical_path_difference)
    m = np.array([[m[0, 0], m[0, 1] * g], [m[1, 0] * np.conj(g), m[1, 1]]], dtype=complex)
    return b.conj().T @ m @ b


def rotation_to_basis(psi) -> np.ndarray:
    """Unitary taking the ket ``psi`` to |H> (and its orthogonal partner to |V>)."""
    v = np.asarray(psi, dtype=complex).reshape(2)
    v = v / np.linalg.norm(v)
    perp = np.array([-np.conj(v[1]), np.conj(v[0])])
    return np.array([v.conj(), perp.conj()])


def coherent_partial_polarizer(t_h: float, t_v: float) -> np.ndarray:
    if not (0.0 <= t_h <= 1.0 and 0.0 <= t_v <= 1.0):
        raise ValueError("intensity transmissions must lie in [0, 1]")
    return np.diag([np.sqrt(t_h), np.sqrt(t_v)]).astype(complex)


def brewster_stack_transmission(num_interfaces: int, loss: float = 0.15) -> tuple[float, float]:
    """(T_H, T_V) of glass plates at Brewster's angle; p (H) passes, s (V) loses ``loss`` per interface."""
    if num_interfaces < 0:
        raise ValueError("num_interfaces must be >= 0")
    return 1.0, (1.0 - loss) ** num_interfaces
