"""Uncertainty ellipsoids of repeated tomographies and a distinguishable-state count.

Each ellipsoid is built from repeated simulated tomographies of one state:
standard deviations along the mean direction and two transverse directions,
scaled by 1.69 (the 95% content of a 3-D gaussian).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import rho_from_poincare
from .counting import NO_DRIFT, DriftModel, per_basis_total, simulate_counts, spawn_seeds
from .tomography import mle_reconstruct

__all__ = [
    "ELLIPSOID_SCALE",
    "DEFAULT_DIRECTION",
    "PROFILE_DRIFT",
    "DEFAULT_RADII",
    "InsufficientTrialsError",
    "UncertaintyEllipsoid",
    "PackingEstimate",
    "reconstruct_trials",
    "ellipsoid_from_points",
    "ellipsoid_at",
    "ellipsoid_profile",
    "count_distinguishable",
]

ELLIPSOID_SCALE = 1.69
# Octant diagonal pointing away from the D and R analysis states.
DEFAULT_DIRECTION = -np.array([1.0, 1.0, 1.0]) / np.sqrt(3.0)
# Slow drift used for the ellipsoid experiment, below the 0.5% bound of the counting model.
PROFILE_DRIFT = DriftModel(0.003, "sinusoidal")
DEFAULT_RADII = (0.0, 0.25, 0.5, 0.75, 1.0)
DEFAULT_PACKING = 0.74
_Z_AXIS = np.array([0.0, 0.0, 1.0])


class InsufficientTrialsError(RuntimeError):
    pass


@dataclass(frozen=True)
class UncertaintyEllipsoid:
    mean_r: np.ndarray
    radial_semiaxis: float
    transverse_semiaxes: tuple[float, float]
    axes_directions: np.ndarray
    trials_used: int = 0

    @property
    def sigmas(self) -> np.ndarray:
        """Per-direction standard deviations (radial, transverse 1, transverse 2)."""
        return np.array([self.radial_semiaxis, *self.transverse_semiaxes]) / ELLIPSOID_SCALE

    @property
    def volume(self) -> float:
        a = self.radial_semiaxis
        b, c = self.transverse_semiaxes
        return 4.0 / 3.0 * np.pi * a * b * c

    @property
    def radius(self) -> float:
        return float(np.linalg.norm(self.mean_r))


@dataclass(frozen=True)
class PackingEstimate:
    total_states: float
    method: str
    packing_fraction: float


def _frame(radial: np.ndarray) -> np.ndarray:
    """Orthonormal rows: radial, then Gram-Schmidt of the z axis, then their cross product."""
    seed = _Z_AXIS if abs(radial @ _Z_AXIS) < 0.9 else np.array([1.0, 0.0, 0.0])
    t1 = seed - (seed @ radial) * radial
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(radial, t1)
    return np.vstack([radial, t1, t2])


def ellipsoid_from_points(points) -> UncertaintyEllipsoid:
    pts = np.asarray(points, dtype=float)
    if len(pts) < 3:
        raise InsufficientTrialsError(f"need at least 3 reconstructions, got {len(pts)}")
    mean = pts.mean(axis=0)
    norm = np.linalg.norm(mean)
    radial = mean / norm if norm >= 1e-6 else np.array([1.0, 0.0, 0.0])
    axes = _frame(radial)
    proj = (pts - mean) @ axes.T
    sd = proj.std(axis=0, ddof=1) * ELLIPSOID_SCALE
    return UncertaintyEllipsoid(mean, float(sd[0]), (float(sd[1]), float(sd[2])), axes, len(pts))


def reconstruct_trials(
    rho,
    trials: int,
    counts_total: float,
    seed: int,
    *,
    drift: DriftModel = NO_DRIFT,
    exact_expectation: bool = False,
    counts_interpretation: str = "total",
) -> np.ndarray:
    """Poincare vectors of ``trials`` independent simulate-and-reconstruct cycles.

    ``counts_interpretation="total"`` treats ``counts_total`` as summed over
    the four settings; ``"per_basis"`` uses it directly as N0 + N1.
    Non-converged reconstructions are dropped.
    """
    if counts_interpretation == "total":
        per_basis = per_basis_total(counts_total)
    elif counts_interpretation == "per_basis":
        per_basis = float(counts_total)
    else:
        raise ValueError(f"unknown counts interpretation {counts_interpretation!r}")
    points = []
    for child in spawn_seeds(seed, trials):
        record = simulate_counts(rho, per_basis, drift, child, exact_expectation=exact_expectation)
        result = mle_reconstruct(record)
        if result.converged:
            points.append(np.array(result.r))
    return np.array(points).reshape(-1, 3)


def ellipsoid_at(rho, trials: int, counts_total: float, seed: int, **kwargs) -> UncertaintyEllipsoid:
    if trials < 3:
        raise ValueError("trials must be at least 3")
    if counts_total <= 0:
        raise ValueError("counts_total must be positive")
    return ellipsoid_from_points(reconstruct_trials(rho, trials, counts_total, seed, **kwargs))


def ellipsoid_profile(
    radii=DEFAULT_RADII,
    trials: int = 10,
    counts_total: float = 300_000,
    seed: int = 0,
    *,
    direction=DEFAULT_DIRECTION,
    drift: DriftModel = PROFILE_DRIFT,
    **kwargs,
) -> list[UncertaintyEllipsoid]:
    """Ellipsoids for states at each radius along one fixed direction."""
    u = np.asarray(direction, dtype=float)
    u = u / np.linalg.norm(u)
    radii = [float(r) for r in radii]
    if any(not 0.0 <= r <= 1.0 for r in radii):
        raise ValueError("radii must lie in [0, 1]")
    children = spawn_seeds(seed, len(radii))
    return [
        ellipsoid_at(rho_from_poincare(r * u), trials, counts_total, child, drift=drift, **kwargs)
        for r, child in zip(radii, children)
    ]


def count_distinguishable(
    profile,
    packing_fraction: float = DEFAULT_PACKING,
    method: str = "radial_shell_integration",
    *,
    grid_points: int = 101,
) -> PackingEstimate:
    """Number of patches that fit in the Poincare ball.

    ``radial_shell_integration`` integrates ``4 pi s^2 / V(s)`` over the
    radius with V interpolated piecewise-linearly between profile radii
    (held constant beyond the ends); ``mean_volume`` divides the ball volume
    by the mean patch volume.
    """
    if len(profile) < 2:
        raise ValueError("need at least two ellipsoids in the profile")
    if not 0.0 < packing_fraction <= 1.0:
        raise ValueError("packing_fraction must lie in (0, 1]")
    volumes = np.array([e.volume for e in profile])
    if method == "mean_volume":
        total = packing_fraction * (4.0 / 3.0 * np.pi) / volumes.mean()
    elif method == "radial_shell_integration":
        radii = np.array([e.radius for e in profile])
        order = np.argsort(radii)
        s = np.linspace(0.0, 1.0, grid_points)
        v = np.interp(s, radii[order], volumes[order])
        total = packing_fraction * float(np.trapezoid(4.0 * np.pi * s**2 / v, s))
    else:
        raise ValueError(f"unknown method {method!r}")
    return PackingEstimate(float(total), method, float(packing_fraction))
