"""Polarization-encoded qubits: state synthesis with waveplates, tomography,
process characterization and distinguishability estimates."""
from .core import (
    ABDelta,
    PhysicalityError,
    PoincareVector,
    check_density_matrix,
    fidelity,
    poincare_from_rho,
    purity,
    qubit_fidelity,
    rho_from_abdelta,
    rho_from_poincare,
    trace_distance,
)
from .counting import CountRecord, DriftModel, simulate_counts
from .distinguish import count_distinguishable, ellipsoid_at, ellipsoid_profile
from .optics import DEFAULT_SPECTRUM, DecohererSpec, Spectrum, coherence_length, decoherence_factor
from .process import ChiMatrix, KrausSet, apply_kraus, chi_from_kraus, kraus_from_chi, sqpt_end_to_end
from .synthesis import forward_pipeline, synth_angles, synth_angles_imperfect
from .tomography import linear_inversion, mle_reconstruct

__version__ = "0.1.0"
