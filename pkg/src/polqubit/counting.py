"""Photon-counting simulation for the four-setting polarization analysis.

Settings are measured in the order V, H, D, R. Random numbers come from
numpy's PCG64 bit generator seeded with the caller's integer seed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ANALYSIS_KETS",
    "ANALYSIS_LABELS",
    "CountRecord",
    "DriftModel",
    "NO_DRIFT",
    "projection_probability",
    "projection_probabilities",
    "expected_counts",
    "simulate_counts",
    "per_basis_total",
    "make_rng",
    "spawn_seeds",
]

_S = 1.0 / np.sqrt(2.0)
# |R> = (|H> - i|V>)/sqrt(2) gives <R|rho|R> = (1 + r_R)/2 in the core convention.
ANALYSIS_KETS = (
    np.array([0.0, 1.0], dtype=complex),
    np.array([1.0, 0.0], dtype=complex),
    np.array([_S, _S], dtype=complex),
    np.array([_S, -1j * _S], dtype=complex),
)
ANALYSIS_LABELS = ("V", "H", "D", "R")

MAX_DRIFT = 0.005


@dataclass(frozen=True)
class CountRecord:
    """Coincidence counts N0..N3 for the analysis states V, H, D, R."""

    n: tuple[int, int, int, int]
    duration_s: float = 100.0
    expected_total: float = float("nan")

    def __post_init__(self):
        n = tuple(int(x) for x in self.n)
        if len(n) != 4:
            raise ValueError("a CountRecord holds exactly four counts")
        if min(n) < 0:
            raise ValueError("counts must be nonnegative")
        object.__setattr__(self, "n", n)

    @property
    def normalization(self) -> int:
        """N0 + N1, the counts in the complete H/V basis."""
        return self.n[0] + self.n[1]


@dataclass(frozen=True)
class DriftModel:
    """Slow multiplicative drift of source brightness or detector efficiency.

    The factor for setting index ``nu`` (0..3) is ``1 + a*g(nu)`` where ``g`` is
    ``sin(pi*nu/2 + phase)`` for ``"sinusoidal"`` and a ramp from -1 to 1 for
    ``"linear_ramp"``. A ``phase`` of ``None`` is drawn from the run's seed.
    """

    relative_amplitude: float = 0.0
    kind: str = "none"
    phase: float | None = None

    def __post_init__(self):
        if self.kind not in ("none", "linear_ramp", "sinusoidal"):
            raise ValueError(f"unknown drift kind {self.kind!r}")
        if not 0.0 <= self.relative_amplitude <= MAX_DRIFT:
            raise ValueError(f"drift amplitude must lie in [0, {MAX_DRIFT}]")

    def factors(self, rng: np.random.Generator | None = None) -> np.ndarray:
        nu = np.arange(4)
        a = self.relative_amplitude
        if self.kind == "none" or a == 0.0:
            return np.ones(4)
        if self.kind == "linear_ramp":
            return 1.0 + a * (2.0 * nu / 3.0 - 1.0)
        phase = self.phase
        if phase is None:
            phase = (rng if rng is not None else np.random.default_rng(0)).uniform(0, 2 * np.pi)
        return 1.0 + a * np.sin(0.5 * np.pi * nu + phase)


NO_DRIFT = DriftModel()


def make_rng(seed: int | np.random.SeedSequence) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def spawn_seeds(seed: int | np.random.SeedSequence, n: int) -> list[np.random.SeedSequence]:
    """Independent child seeds for ``n`` sub-tasks, stable for a given parent."""
    parent = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return parent.spawn(n)


def projection_probability(rho, psi) -> float:
    v = np.asarray(psi, dtype=complex)
    p = float(np.real(v.conj() @ np.asarray(rho, dtype=complex) @ v))
    return min(max(p, 0.0), 1.0)


def projection_probabilities(rho) -> np.ndarray:
    return np.array([projection_probability(rho, k) for k in ANALYSIS_KETS])


def expected_counts(rho, total: float) -> np.ndarray:
    """Noiseless counts for the four settings when N0 + N1 is expected to be ``total``."""
    if total <= 0:
        raise ValueError("total must be positive")
    return total * projection_probabilities(rho)


def per_basis_total(counts_total: float) -> float:
    """Expected N0 + N1 when ``counts_total`` is summed over all four settings."""
    return 0.5 * counts_total


def simulate_counts(
    rho,
    mean_total_per_basis: float,
    drift: DriftModel = NO_DRIFT,
    seed: int | np.random.SeedSequence = 0,
    *,
    exact_expectation: bool = False,
    background: float = 0.0,
    duration_s: float = 100.0,
) -> CountRecord:
    """Draw one CountRecord.

    Setting ``nu`` yields Poisson(N * p_nu * drift_nu + background) counts,
    with N = ``mean_total_per_basis``. ``exact_expectation`` rounds the means
    instead of sampling.
    """
    if mean_total_per_basis <= 0:
        raise ValueError("mean_total_per_basis must be positive")
    if background < 0:
        raise ValueError("background must be nonnegative")
    rng = make_rng(seed)
    means = mean_total_per_basis * projection_probabilities(rho) * drift.factors(rng) + background
    if exact_expectation:
        n = np.rint(means).astype(np.int64)
    else:
        n = rng.poisson(means)
    return CountRecord(tuple(int(x) for x in n), duration_s, float(mean_total_per_basis))
