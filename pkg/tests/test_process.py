import numpy as np
import pytest

from polqubit.core import (
    RHO_D,
    RHO_H,
    RHO_MIXED,
    RHO_R,
    RHO_V,
    PhysicalityError,
    poincare_from_rho,
    purity,
    rho_from_poincare,
    trace_distance,
)
from polqubit.optics import DEFAULT_SPECTRUM, DecohererSpec, coherence_length, decohere, hwp, qwp
from polqubit.process import (
    CARDINAL_STATES,
    PAULI_BASIS,
    AnnihilatedStateError,
    ChiMatrix,
    KrausSet,
    apply_chi,
    apply_kraus,
    apply_kraus_raw,
    canonical_processes,
    chi_from_kraus,
    decoherer_kraus,
    kraus_from_chi,
    kraus_from_elements,
    sphere_map,
    sqpt_end_to_end,
    sqpt_reconstruct,
    SQPT_INPUTS,
)

from conftest import random_states

I2, X, Y, Z = PAULI_BASIS
S = np.sqrt(0.5)
L_C = coherence_length(DEFAULT_SPECTRUM)


def random_channel(rng, n_ops=None, trace_preserving=True):
    n = n_ops or rng.integers(1, 5)
    g = rng.normal(size=(2 * n, 2)) + 1j * rng.normal(size=(2 * n, 2))
    q, _ = np.linalg.qr(g)
    ops = [q[2 * i : 2 * i + 2, :] for i in range(n)]
    if not trace_preserving:
        ops = [rng.uniform(0.2, 1.0) * e for e in ops]
    return KrausSet(tuple(ops))


def same_action(k1, k2, states=None):
    states = states or [rho for _, rho in CARDINAL_STATES]
    return max(np.max(np.abs(apply_kraus_raw(k1, r) - apply_kraus_raw(k2, r))) for r in states)


def test_apply_kraus_examples():
    out, w = apply_kraus(KrausSet((I2,)), RHO_D)
    assert np.allclose(out, RHO_D) and w == pytest.approx(1.0)
    with pytest.raises(AnnihilatedStateError):
        apply_kraus(KrausSet((np.diag([1.0, 0.0]),)), RHO_V)
    out, w = apply_kraus(KrausSet((S * I2, S * Z)), RHO_D)
    assert np.allclose(out, RHO_MIXED) and w == pytest.approx(1.0)


def test_chi_examples():
    assert np.allclose(chi_from_kraus(KrausSet((I2,))).chi, np.diag([1, 0, 0, 0]))
    had = chi_from_kraus(canonical_processes()["hadamard"]).chi
    expected = np.zeros((4, 4))
    expected[np.ix_([1, 3], [1, 3])] = 0.5
    assert np.allclose(had, expected)
    pol = chi_from_kraus(KrausSet((np.diag([1.0, 0.0]),))).chi
    expected = np.zeros((4, 4))
    expected[np.ix_([0, 3], [0, 3])] = 0.25
    assert np.allclose(pol, expected)


def test_kraus_from_chi_examples():
    k = kraus_from_chi(ChiMatrix(np.diag([1, 0, 0, 0])))
    assert len(k) == 1 and np.allclose(k.ops[0], I2)
    had = chi_from_kraus(canonical_processes()["hadamard"])
    k = kraus_from_chi(had)
    assert len(k) == 1
    assert abs(np.trace(k.ops[0].conj().T @ (X + Z) * S)) == pytest.approx(2.0)
    inc = canonical_processes()["incoherent_partial_polarizer"]
    k = kraus_from_chi(chi_from_kraus(inc))
    assert len(k) == 2
    assert same_action(k, inc) < 1e-12


def test_kraus_from_chi_rejects_non_psd():
    with pytest.raises(PhysicalityError):
        ChiMatrix(np.diag([1, -0.1, 0, 0]))


def test_kraus_set_rejects_amplifier():
    with pytest.raises(PhysicalityError):
        KrausSet((1.1 * I2,))


def test_canonical_catalog():
    cat = canonical_processes()
    assert set(cat) == {
        "hadamard",
        "h_polarizer",
        "coherent_partial_polarizer",
        "incoherent_partial_polarizer",
        "decoherer_HV",
    }
    assert abs(np.linalg.det(cat["hadamard"].ops[0])) == pytest.approx(1.0)
    inc = cat["incoherent_partial_polarizer"].ops
    assert np.allclose(inc[0], S * np.diag([1, 0])) and np.allclose(inc[1], S * I2)
    out, _ = apply_kraus(cat["decoherer_HV"], RHO_R)
    assert np.allclose(out, RHO_MIXED)
    assert np.allclose(cat["coherent_partial_polarizer"].ops[0], np.diag([1, S]))


def test_chi_round_trip_and_orthogonality(rng):
    for _ in range(1000):
        k = random_channel(rng, trace_preserving=rng.random() < 0.7)
        chi = chi_from_kraus(k)
        back = kraus_from_chi(chi)
        assert np.linalg.norm(chi_from_kraus(back).chi - chi.chi) < 1e-9
        for a in range(len(back)):
            for b in range(a + 1, len(back)):
                assert abs(np.trace(back.ops[a].conj().T @ back.ops[b])) < 1e-9


def test_action_equivalence(rng):
    for rho in random_states(rng, 100):
        k = random_channel(rng)
        assert trace_distance(apply_kraus_raw(k, rho), apply_chi(chi_from_kraus(k), rho)) < 1e-10


def test_chi_completeness_matches_kraus(rng):
    for _ in range(50):
        k = random_channel(rng, trace_preserving=False)
        assert np.allclose(chi_from_kraus(k).completeness(), k.completeness(), atol=1e-12)


def test_sqpt_reconstruct_examples():
    ident = KrausSet((I2,))
    chi = sqpt_reconstruct([apply_kraus_raw(ident, rho) for _, rho in SQPT_INPUTS])
    assert np.allclose(chi.chi, np.diag([1, 0, 0, 0]), atol=1e-12)
    for name in ("hadamard", "coherent_partial_polarizer"):
        k = canonical_processes()[name]
        chi = sqpt_reconstruct([apply_kraus_raw(k, rho) for _, rho in SQPT_INPUTS])
        assert np.linalg.norm(chi.chi - chi_from_kraus(k).chi) < 1e-9


def test_sqpt_exact_on_random_channels(rng):
    for _ in range(100):
        k = random_channel(rng, trace_preserving=False)
        chi = sqpt_reconstruct([apply_kraus_raw(k, rho) for _, rho in SQPT_INPUTS])
        assert np.linalg.norm(chi.chi - chi_from_kraus(k).chi) < 1e-9


def test_sqpt_end_to_end_examples():
    chi = sqpt_end_to_end(KrausSet((I2,)), 1e5, 0, exact_expectation=True)
    assert np.allclose(chi.chi, np.diag([1, 0, 0, 0]), atol=1e-8)
    had = canonical_processes()["hadamard"]
    assert np.linalg.norm(sqpt_end_to_end(had, 1e5, 1).chi - chi_from_kraus(had).chi) < 0.02
    dec = sqpt_end_to_end(canonical_processes()["decoherer_HV"], 1e5, 2)
    out = apply_chi(dec, RHO_D)
    assert trace_distance(out / np.trace(out), RHO_MIXED) < 0.02


def test_sqpt_end_to_end_deterministic_and_flags():
    pol = canonical_processes()["h_polarizer"]
    a = sqpt_end_to_end(pol, 1e4, 5)
    b = sqpt_end_to_end(pol, 1e4, 5)
    assert np.array_equal(a.chi, b.chi)
    assert a.low_confidence == ("V",)


def test_sqpt_design_rank_on_trace_preserving_subspace():
    # Hermitian chi has 16 real parameters; trace preservation removes 4
    basis = []
    for i in range(4):
        for j in range(4):
            m = np.zeros((4, 4), dtype=complex)
            if i == j:
                m[i, i] = 1
            elif i < j:
                m[i, j] = m[j, i] = 1
            else:
                m[j, i], m[i, j] = 1j, -1j
            basis.append(m)
    constraint = np.array(
        [
            np.concatenate(
                [
                    (sum(m[a, b] * PAULI_BASIS[b].conj().T @ PAULI_BASIS[a] for a in range(4) for b in range(4))).reshape(4).real,
                    (sum(m[a, b] * PAULI_BASIS[b].conj().T @ PAULI_BASIS[a] for a in range(4) for b in range(4))).reshape(4).imag,
                ]
            )
            for m in basis
        ]
    ).T
    free = 16 - np.linalg.matrix_rank(constraint)
    assert free == 12


def test_decoherer_kraus_matches_decohere(rng):
    for opd in (0.0, 0.3 * L_C, L_C, 20 * L_C):
        d = DecohererSpec(opd, hwp(0.3) @ qwp(0.1))
        k = decoherer_kraus(DEFAULT_SPECTRUM, d)
        assert k.trace_preserving
        for rho in random_states(rng, 20):
            assert np.allclose(apply_kraus_raw(k, rho), decohere(rho, DEFAULT_SPECTRUM, d), atol=1e-12)


def test_kraus_from_elements():
    k = kraus_from_elements([{"kind": "hwp", "theta": np.pi / 8}])
    out, _ = apply_kraus(k, RHO_H)
    assert np.allclose(out, RHO_D)
    k = kraus_from_elements([{"kind": "hwp", "theta": np.pi / 8}, {"kind": "decoherer", "opd": 20 * L_C}])
    out, _ = apply_kraus(k, RHO_H)
    assert np.allclose(out, RHO_MIXED, atol=1e-12)
    k = kraus_from_elements([{"kind": "partial_polarizer", "tH": 1.0, "tV": 0.0}])
    assert np.allclose(apply_kraus(k, RHO_D)[0], RHO_H)
    with pytest.raises(ValueError):
        kraus_from_elements([{"kind": "mirror"}])


def test_sphere_map_examples():
    m = sphere_map(KrausSet((I2,)), (5, 8))
    assert len(m.inputs) == 5 * 8 + 6
    assert np.allclose(m.inputs, m.outputs, atol=1e-12)
    m = sphere_map(canonical_processes()["h_polarizer"])
    live = m.weights > 1e-12
    assert np.allclose(m.outputs[live], (1, 0, 0), atol=1e-9)
    assert np.all(m.outputs[~live] == 0)
    m = sphere_map(canonical_processes()["decoherer_HV"])
    assert np.allclose(m.outputs[:, 1:], 0, atol=1e-12)
    assert np.allclose(m.outputs[:, 0], m.inputs[:, 0], atol=1e-12)
    with pytest.raises(ValueError):
        sphere_map(KrausSet((I2,)), (1, 8))


def test_sphere_map_invariants(rng):
    for name, k in canonical_processes().items():
        m = sphere_map(k, (9, 12))
        assert np.all(np.linalg.norm(m.outputs, axis=1) <= 1 + 1e-9)
    m = sphere_map(canonical_processes()["hadamard"], (9, 12))
    assert np.allclose(np.linalg.norm(m.outputs, axis=1), 1.0)
    m = sphere_map(canonical_processes()["decoherer_HV"], (9, 12))
    assert np.all(np.abs(m.outputs[:, 1]) + np.abs(m.outputs[:, 2]) <= np.abs(m.inputs[:, 1]) + np.abs(m.inputs[:, 2]) + 1e-12)
