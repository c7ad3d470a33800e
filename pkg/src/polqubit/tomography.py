"""Single-qubit state reconstruction from four-setting count records.

The maximum-likelihood route parametrizes the state as
``rho = T^dag T / Tr(T^dag T)`` with ``T = [[t1, 0], [t3 + i t4, t2]]`` and
minimizes a Poisson-weighted squared residual with Nelder-Mead.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize

from .core import PoincareVector, poincare_from_rho
from .counting import CountRecord

__all__ = [
    "DegenerateCountsError",
    "TParams",
    "TomographyResult",
    "linear_inversion",
    "rho_from_t",
    "t_start_from_counts",
    "likelihood",
    "mle_reconstruct",
]

DENOMINATOR_FLOOR = 0.5
FATOL = 1e-10
MAX_EVALS = 20_000
_RH_CAP = 1.0 - 1e-6


class DegenerateCountsError(ValueError):
    """N0 + N1 = 0: the counts carry no normalization."""


class TParams(NamedTuple):
    t1: float
    t2: float
    t3: float
    t4: float


@dataclass(frozen=True)
class TomographyResult:
    rho: np.ndarray
    t: TParams
    residual_likelihood: float
    start_likelihood: float
    iterations: int
    evaluations: int
    converged: bool

    @property
    def r(self) -> PoincareVector:
        return poincare_from_rho(self.rho)


def _normalization(c: CountRecord) -> int:
    norm = c.normalization
    if norm <= 0:
        raise DegenerateCountsError("N0 + N1 = 0; counts cannot be normalized")
    return norm


def linear_inversion(c: CountRecord) -> PoincareVector:
    """Direct inversion; may return |r| > 1."""
    norm = _normalization(c)
    _, n1, n2, n3 = c.n
    return PoincareVector(2 * n1 / norm - 1, 2 * n2 / norm - 1, 2 * n3 / norm - 1)


def rho_from_t(t) -> np.ndarray:
    t1, t2, t3, t4 = (float(x) for x in t)
    tr = t1 * t1 + t2 * t2 + t3 * t3 + t4 * t4
    if tr == 0.0 or not np.isfinite(tr):
        raise ValueError("t parameters must be finite and not all zero")
    off = complex(t3, -t4) * t2
    return np.array(
        [[t1 * t1 + t3 * t3 + t4 * t4, off], [off.conjugate(), t2 * t2]], dtype=complex
    ) / tr


def t_start_from_counts(c: CountRecord) -> TParams:
    """Starting point that reproduces the linear-inversion state when it is physical.

    r_H is capped just below 1 to keep the expressions finite, and a negative
    radicand for t1 (unphysical inversion) is clamped to zero.
    """
    r_h, r_d, r_r = linear_inversion(c)
    r_h = min(r_h, _RH_CAP)
    s = np.sqrt(2.0 * (1.0 - r_h))
    radicand = 1.0 - ((1.0 - r_h) ** 2 + r_d**2 + r_r**2) / (2.0 * (1.0 - r_h))
    t1 = np.sqrt(max(radicand, 0.0))
    return TParams(float(t1), float(s / 2.0), float(r_d / s), float(-r_r / s))


def _probabilities(t) -> tuple[float, float, float, float]:
    t1, t2, t3, t4 = t
    tr = t1 * t1 + t2 * t2 + t3 * t3 + t4 * t4
    p_v = t2 * t2 / tr
    p_d = 0.5 + t2 * t3 / tr
    p_r = 0.5 - t2 * t4 / tr
    return p_v, 1.0 - p_v, p_d, p_r


def _likelihood(n: tuple[int, ...], norm: float, t) -> float:
    tr = t[0] * t[0] + t[1] * t[1] + t[2] * t[2] + t[3] * t[3]
    if not tr > 0.0:
        return float("inf")
    total = 0.0
    for p, count in zip(_probabilities(t), n):
        expect = norm * p
        total += (expect - count) ** 2 / (2.0 * max(expect, DENOMINATOR_FLOOR))
    return total


def likelihood(c: CountRecord, t) -> float:
    """Residual to be minimized: sum over settings of (expected - N)^2 / (2 expected).

    Expected counts use N = N0 + N1; denominators are floored at 0.5 counts.
    """
    return _likelihood(c.n, float(_normalization(c)), tuple(float(x) for x in t))


def mle_reconstruct(c: CountRecord, *, max_evals: int = MAX_EVALS, fatol: float = FATOL) -> TomographyResult:
    norm = float(_normalization(c))
    n = c.n
    t0 = np.array(t_start_from_counts(c))
    start = _likelihood(n, norm, t0)

    def objective(x):
        return _likelihood(n, norm, (x[0], x[1], x[2], x[3]))

    # below a few ulps of the objective the spread cannot shrink any further
    fatol = max(fatol, 8.0 * np.finfo(float).eps * max(start, norm))
    res = _nelder_mead(objective, t0, max_evals, fatol)
    best_x, best_f, nit, nfev, ok = res.x, float(res.fun), res.nit, res.nfev, res.success
    if not ok:
        jitter = np.random.default_rng(0).normal(scale=1e-3, size=4)
        res2 = _nelder_mead(objective, best_x + jitter, max_evals, fatol)
        nit += res2.nit
        nfev += res2.nfev
        ok = bool(res2.success)
        if res2.fun < best_f:
            best_x, best_f = res2.x, float(res2.fun)
    if not best_f <= start:
        best_x, best_f = t0, start
    t = TParams(*(float(x) for x in best_x))
    return TomographyResult(rho_from_t(t), t, best_f, start, int(nit), int(nfev), ok)


def _nelder_mead(objective, x0: np.ndarray, max_evals: int, fatol: float):
    scale = max(float(np.linalg.norm(x0)), 1.0)
    simplex = np.vstack([x0] + [x0 + 0.05 * scale * e for e in np.eye(4)])
    return minimize(
        objective,
        x0,
        method="Nelder-Mead",
        options={
            "xatol": 1e-9 * scale,
            "fatol": fatol,
            "maxfev": max_evals,
            "maxiter": max_evals,
            "initial_simplex": simplex,
        },
    )
