"""Single-qubit processes: Kraus sets, chi matrices, SQPT and sphere maps.

The chi matrix is expressed in the operator basis (I, X, Y, Z) with
``E(rho) = sum_ij chi[i, j] sigma_i rho sigma_j``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    PhysicalityError,
    RHO_A,
    RHO_D,
    RHO_H,
    RHO_L,
    RHO_R,
    RHO_V,
    poincare_from_rho,
    rho_from_poincare,
)
from .counting import NO_DRIFT, DriftModel, simulate_counts, spawn_seeds
from .optics import (
    DEFAULT_SPECTRUM,
    DecohererSpec,
    Spectrum,
    coherent_partial_polarizer,
    decoherence_factor,
    general_waveplate,
    hwp,
    qwp,
)
from .tomography import mle_reconstruct

__all__ = [
    "BASIS_ID",
    "PAULI_BASIS",
    "AnnihilatedStateError",
    "KrausSet",
    "ChiMatrix",
    "SphereMap",
    "apply_kraus",
    "apply_kraus_raw",
    "apply_chi",
    "chi_from_kraus",
    "kraus_from_chi",
    "canonical_processes",
    "decoherer_kraus",
    "kraus_from_elements",
    "SQPT_INPUTS",
    "sqpt_reconstruct",
    "sqpt_end_to_end",
    "sphere_map",
    "CARDINAL_STATES",
]

BASIS_ID = "pauli-eq5"
PAULI_BASIS = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)
ANNIHILATION_WEIGHT = 1e-12
KRAUS_EIG_CUTOFF = 1e-9

SQPT_INPUTS = (("H", RHO_H), ("V", RHO_V), ("D", RHO_D), ("R", RHO_R))
CARDINAL_STATES = (
    ("H", RHO_H),
    ("V", RHO_V),
    ("D", RHO_D),
    ("A", RHO_A),
    ("R", RHO_R),
    ("L", RHO_L),
)


class AnnihilatedStateError(ArithmeticError):
    """The process removed (almost) every photon; no output state can be normalized."""

    def __init__(self, weight: float):
        super().__init__(f"survival weight {weight:.3g} too small to normalize the output")
        self.weight = weight


@dataclass(frozen=True)
class KrausSet:
    ops: tuple[np.ndarray, ...]

    def __post_init__(self):
        ops = tuple(np.asarray(e, dtype=complex) for e in self.ops)
        if not ops:
            raise ValueError("a KrausSet needs at least one operator")
        if any(e.shape != (2, 2) for e in ops):
            raise ValueError("Kraus operators must be 2x2")
        object.__setattr__(self, "ops", ops)
        if np.linalg.eigvalsh(self.completeness()).max() > 1.0 + 1e-10:
            raise PhysicalityError("sum of E^dag E exceeds the identity (process amplifies)")

    def completeness(self) -> np.ndarray:
        return sum(e.conj().T @ e for e in self.ops)

    @property
    def trace_preserving(self) -> bool:
        return bool(np.allclose(self.completeness(), np.eye(2), atol=1e-10))

    def __len__(self) -> int:
        return len(self.ops)

    def __iter__(self):
        return iter(self.ops)


@dataclass(frozen=True)
class ChiMatrix:
    chi: np.ndarray
    basis: str = BASIS_ID
    low_confidence: tuple[str, ...] = field(default=())

    def __post_init__(self):
        m = np.asarray(self.chi, dtype=complex)
        if m.shape != (4, 4):
            raise ValueError("chi must be 4x4")
        if np.max(np.abs(m - m.conj().T)) > 1e-10:
            raise PhysicalityError("chi is not Hermitian")
        if np.linalg.eigvalsh(m).min() < -1e-9:
            raise PhysicalityError("chi is not positive semidefinite")
        object.__setattr__(self, "chi", m)

    def completeness(self) -> np.ndarray:
        return sum(
            self.chi[i, j] * PAULI_BASIS[j].conj().T @ PAULI_BASIS[i]
            for i in range(4)
            for j in range(4)
        )


@dataclass(frozen=True)
class SphereMap:
    """Pure inputs on a latitude-longitude mesh (plus cardinal points) and their images.

    ``inputs`` and ``outputs`` are (n, 3) Poincare vectors; ``weights`` the
    survival probabilities. Annihilated inputs map to the origin with weight 0.
    """

    inputs: np.ndarray
    outputs: np.ndarray
    weights: np.ndarray
    mesh_resolution: tuple[int, int]
    labels: tuple[str, ...]


def _as_kraus(k) -> KrausSet:
    return k if isinstance(k, KrausSet) else KrausSet(tuple(k))


def apply_kraus_raw(k, rho) -> np.ndarray:
    r = np.asarray(rho, dtype=complex)
    return sum(e @ r @ e.conj().T for e in _as_kraus(k))


def apply_kraus(k, rho) -> tuple[np.ndarray, float]:
    """Return the normalized output state and its survival weight.

    Raises :class:`AnnihilatedStateError` when the weight is below 1e-12.
    """
    raw = apply_kraus_raw(k, rho)
    w = float(np.trace(raw).real)
    if w < ANNIHILATION_WEIGHT:
        raise AnnihilatedStateError(w)
    return raw / w, w


def apply_chi(chi, rho) -> np.ndarray:
    """Unnormalized output ``sum_ij chi_ij sigma_i rho sigma_j``."""
    m = chi.chi if isinstance(chi, ChiMatrix) else np.asarray(chi, dtype=complex)
    r = np.asarray(rho, dtype=complex)
    return sum(
        m[i, j] * PAULI_BASIS[i] @ r @ PAULI_BASIS[j] for i in range(4) for j in range(4)
    )


def _coefficients(e: np.ndarray) -> np.ndarray:
    return np.array([0.5 * np.trace(s.conj().T @ e) for s in PAULI_BASIS])


def chi_from_kraus(k) -> ChiMatrix:
    coeffs = np.array([_coefficients(e) for e in _as_kraus(k)])
    chi = coeffs.T @ coeffs.conj()
    return ChiMatrix(0.5 * (chi + chi.conj().T))


def kraus_from_chi(chi) -> KrausSet:
    """Orthogonal Kraus operators from the eigendecomposition of chi.

    Eigenvalues below 1e-9 are dropped. Operators come out sorted by
    decreasing weight, each eigenvector phased so its largest component is
    real and positive.
    """
    m = chi.chi if isinstance(chi, ChiMatrix) else ChiMatrix(chi).chi
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    cols = []
    for lam, vec in zip(w, v.T):
        if lam < KRAUS_EIG_CUTOFF:
            continue
        pivot = vec[np.argmax(np.abs(vec) > np.abs(vec).max() - 1e-12)]
        vec = vec * (abs(pivot) / pivot)
        cols.append((round(-lam, 12), tuple(np.round(vec.real, 12)) + tuple(np.round(vec.imag, 12)), lam, vec))
    cols.sort(key=lambda item: (item[0], item[1]))
    if not cols:
        return KrausSet((np.zeros((2, 2), dtype=complex),))
    ops = tuple(
        np.sqrt(lam) * sum(c * s for c, s in zip(vec, PAULI_BASIS)) for _, _, lam, vec in cols
    )
    return KrausSet(ops)


def decoherer_kraus(spec: Spectrum, d: DecohererSpec) -> KrausSet:
    """Kraus form of :func:`optics.decohere`: a phase retarder followed by partial dephasing."""
    g = decoherence_factor(spec, d.optical_path_difference)
    mag, phase = abs(g), np.angle(g)
    u = np.diag([np.exp(0.5j * phase), np.exp(-0.5j * phase)])
    b = d.basis_rotation
    keep = np.sqrt(0.5 * (1.0 + mag)) * (b.conj().T @ u @ b)
    flip = np.sqrt(0.5 * max(1.0 - mag, 0.0)) * (b.conj().T @ PAULI_BASIS[3] @ u @ b)
    return KrausSet((keep, flip))


def kraus_from_elements(elements, spec: Spectrum = DEFAULT_SPECTRUM) -> KrausSet:
    """Compose optical element descriptions (applied in order) into one Kraus set.

    Each element is a dict as produced by :mod:`polqubit.serialization`:
    ``hwp``/``qwp`` with ``theta`` (radians), ``waveplate`` with ``retardance``
    and ``theta``, ``partial_polarizer`` with ``tH``/``tV``, and ``decoherer``
    with ``opd`` (meters) and optional ``basis`` unitary.
    """
    ops = [np.eye(2, dtype=complex)]
    for el in elements:
        kind = el["kind"]
        if kind == "hwp":
            stage = [hwp(el["theta"])]
        elif kind == "qwp":
            stage = [qwp(el["theta"])]
        elif kind == "waveplate":
            stage = [general_waveplate(el["retardance"], el["theta"])]
        elif kind == "partial_polarizer":
            stage = [coherent_partial_polarizer(el["tH"], el["tV"])]
        elif kind == "decoherer":
            basis = el.get("basis")
            d = DecohererSpec(el["opd"]) if basis is None else DecohererSpec(el["opd"], basis)
            stage = list(decoherer_kraus(spec, d).ops)
        else:
            raise ValueError(f"unknown optical element kind {kind!r}")
        ops = [s @ e for s in stage for e in ops]
    return KrausSet(tuple(ops))


def canonical_processes() -> dict[str, KrausSet]:
    """The five example processes, probabilities folded into the operators."""
    s = np.sqrt(0.5)
    x, z, i2 = PAULI_BASIS[1], PAULI_BASIS[3], PAULI_BASIS[0]
    h_proj = np.diag([1.0, 0.0]).astype(complex)
    return {
        "hadamard": KrausSet(((x + z) * s,)),
        "h_polarizer": KrausSet((h_proj,)),
        "coherent_partial_polarizer": KrausSet((coherent_partial_polarizer(1.0, 0.5),)),
        "incoherent_partial_polarizer": KrausSet((s * h_proj, s * i2)),
        "decoherer_HV": KrausSet((s * i2, s * z)),
    }


def _design_matrix() -> np.ndarray:
    rows = []
    for _, rho in SQPT_INPUTS:
        blocks = [(PAULI_BASIS[i] @ rho @ PAULI_BASIS[j]).reshape(4) for i in range(4) for j in range(4)]
        rows.append(np.array(blocks).T)
    return np.vstack(rows)


_DESIGN = _design_matrix()
assert np.linalg.matrix_rank(_DESIGN) == 16


def sqpt_reconstruct(outputs, *, low_confidence: tuple[str, ...] = ()) -> ChiMatrix:
    """Chi matrix from the unnormalized outputs for inputs H, V, D, R (in that order).

    The exact linear solution is Hermitized; negative eigenvalues are then
    clipped and the result rescaled to keep the trace fixed by the data.
    """
    outs = [np.asarray(o, dtype=complex) for o in outputs]
    if len(outs) != 4 or any(o.shape != (2, 2) for o in outs):
        raise ValueError("need four 2x2 output matrices for inputs H, V, D, R")
    rhs = np.concatenate([o.reshape(4) for o in outs])
    chi = np.linalg.solve(_DESIGN, rhs).reshape(4, 4)
    chi = 0.5 * (chi + chi.conj().T)
    target_trace = float(np.trace(chi).real)
    w, v = np.linalg.eigh(chi)
    if w.min() < 0:
        w = np.clip(w, 0.0, None)
        chi = (v * w) @ v.conj().T
        tr = float(np.trace(chi).real)
        if tr > 0:
            chi *= max(target_trace, 0.0) / tr
    return ChiMatrix(chi, low_confidence=tuple(low_confidence))


def sqpt_end_to_end(
    k,
    counts_per_setting: float,
    seed: int = 0,
    *,
    exact_expectation: bool = False,
    drift: DriftModel = NO_DRIFT,
) -> ChiMatrix:
    """Simulated SQPT: prepare H, V, D, R, apply ``k``, count, reconstruct, solve for chi.

    ``counts_per_setting`` is the expected N0 + N1 for an unattenuated input;
    lossy processes see proportionally fewer counts. Each input branch uses an
    independent child seed. Inputs with no detected photons are reported in
    ``low_confidence`` and contribute a zero output.

    ``exact_expectation`` is the noiseless limit: the exact unnormalized
    outputs go straight into the linear inversion, since rounding expected
    counts to integers would leave errors of order 1/counts in chi.
    """
    if counts_per_setting <= 0:
        raise ValueError("counts_per_setting must be positive")
    k = _as_kraus(k)
    seeds = spawn_seeds(seed, len(SQPT_INPUTS))
    outputs, flagged = [], []
    for (label, rho_in), child in zip(SQPT_INPUTS, seeds):
        raw = apply_kraus_raw(k, rho_in)
        weight = float(np.trace(raw).real)
        if weight < ANNIHILATION_WEIGHT:
            flagged.append(label)
            outputs.append(np.zeros((2, 2), dtype=complex))
            continue
        if exact_expectation:
            outputs.append(raw)
            continue
        record = simulate_counts(
            raw / weight,
            counts_per_setting * weight,
            drift,
            child,
        )
        if record.normalization == 0:
            flagged.append(label)
            outputs.append(np.zeros((2, 2), dtype=complex))
            continue
        measured_weight = record.normalization / counts_per_setting
        outputs.append(measured_weight * mle_reconstruct(record).rho)
    return sqpt_reconstruct(outputs, low_confidence=tuple(flagged))


def _mesh_states(n_lat: int, n_lon: int):
    lats = np.linspace(-0.5 * np.pi, 0.5 * np.pi, n_lat)
    lons = np.linspace(-np.pi, np.pi, n_lon, endpoint=False)
    for lat in lats:
        for lon in lons:
            yield np.array([np.cos(lat) * np.cos(lon), np.cos(lat) * np.sin(lon), np.sin(lat)])


def sphere_map(k, res: tuple[int, int] = (25, 50)) -> SphereMap:
    n_lat, n_lon = res
    if n_lat < 2 or n_lon < 4:
        raise ValueError("mesh resolution must be at least 2 x 4")
    k = _as_kraus(k)
    points = [("mesh", r) for r in _mesh_states(n_lat, n_lon)]
    points += [(label, np.array(poincare_from_rho(rho))) for label, rho in CARDINAL_STATES]
    ins, outs, weights, labels = [], [], [], []
    for label, r_in in points:
        raw = apply_kraus_raw(k, rho_from_poincare(r_in))
        w = float(np.trace(raw).real)
        r_out = np.array(poincare_from_rho(raw / w)) if w >= ANNIHILATION_WEIGHT else np.zeros(3)
        ins.append(r_in)
        outs.append(r_out)
        weights.append(max(w, 0.0))
        labels.append(label)
    return SphereMap(np.array(ins), np.array(outs), np.array(weights), (n_lat, n_lon), tuple(labels))
