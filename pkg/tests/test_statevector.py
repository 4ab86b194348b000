import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adaptive_qse.io import load_hamiltonian_full
from adaptive_qse.pauli import PauliSum
from adaptive_qse.statevector import (SectorSpec, Statevector, apply, basis_probabilities, cisd_basis, cisd_state,
                                      dense_matrix, exact_eigenstate, expectation, pauli_expectations,
                                      restricted_matrix, sample_in_basis, sector_indices, sector_spectrum)
from conftest import ALL_FIXTURES, H2, H4_CHAIN
from oracles import load_integrals_dense, pauli_dense, sector_eigh, terms_dense

# dense diagonalisation of the fixture integrals in the occupation basis (oracles.py)
H2_E_GROUND = -1.1373060357534
H2_E_ONE_ELECTRON = -0.5363700785542703


def random_state(n, seed):
    r = np.random.default_rng(seed)
    v = r.normal(size=2 ** n) + 1j * r.normal(size=2 ** n)
    return Statevector.from_amplitudes(v)


def test_statevector_validation():
    with pytest.raises(ValueError, match="normalised"):
        Statevector(1, np.array([1.0, 1.0]))
    with pytest.raises(ValueError, match="amplitudes"):
        Statevector(2, np.array([1.0, 0.0]))


def test_basis_state_index_convention():
    s = Statevector.basis_state("100")
    assert s.amplitudes[4] == 1
    z0 = PauliSum.from_terms({"ZII": 1.0})
    assert expectation(s, z0) == pytest.approx(-1)


@settings(max_examples=25, deadline=None)
@given(st.dictionaries(st.text("IXYZ", min_size=3, max_size=3), st.complex_numbers(max_magnitude=2), min_size=1,
                       max_size=6))
def test_dense_matrix_matches_kron(terms):
    h = PauliSum.from_terms(terms)
    want = terms_dense({p.label: c for p, c in h.terms.items()}) if len(h) else np.zeros((8, 8))
    assert np.allclose(dense_matrix(h), want)


def test_apply_and_expectation_against_dense():
    h = PauliSum.from_terms({"XYZ": 0.3, "ZZI": -1.0, "IYY": 0.7, "III": 0.1})
    s = random_state(3, 1)
    assert np.allclose(apply(h, s.amplitudes), dense_matrix(h) @ s.amplitudes)
    assert expectation(s, h) == pytest.approx(np.vdot(s.amplitudes, dense_matrix(h) @ s.amplitudes))


def test_pauli_expectations_vectorised():
    s = random_state(4, 2)
    labels = ["".join(p) for p in itertools.product("IXYZ", repeat=4)][1:]
    ps = [PauliSum.from_terms({l: 1.0}).strings[0] for l in labels]
    got = pauli_expectations(s, np.array([p.x for p in ps]), np.array([p.z for p in ps]))
    want = [np.vdot(s.amplitudes, pauli_dense(l) @ s.amplitudes).real for l in labels]
    assert np.allclose(got, want)


def test_h2_ground_energy_matches_fixture_and_oracle(h2_loaded):
    e, _ = exact_eigenstate(h2_loaded.hamiltonian, SectorSpec(2))
    assert e == pytest.approx(H2_E_GROUND, abs=1e-10)
    assert e == pytest.approx(h2_loaded.metadata["e_fci"], abs=1e-9)


def test_h2_one_electron_sector(h2):
    w, states = sector_spectrum(h2, SectorSpec(1))
    assert w[0] == pytest.approx(H2_E_ONE_ELECTRON, abs=1e-10)
    assert w[0] == pytest.approx(w[1], abs=1e-10)  # spin doublet
    for s in states:
        occ = np.bitwise_count(np.nonzero(np.abs(s.amplitudes) > 1e-12)[0])
        assert set(occ.tolist()) == {1}


@pytest.mark.parametrize("path", ALL_FIXTURES, ids=lambda p: p.stem)
def test_fixture_spectra_match_occupation_oracle(path):
    loaded = load_hamiltonian_full(path)
    n, ne = loaded.hamiltonian.n_qubits, loaded.n_electrons
    dense = load_integrals_dense(path)
    for sector in (ne, ne - 1):
        want, _ = sector_eigh(dense, n, sector)
        got, _ = sector_spectrum(loaded.hamiltonian, SectorSpec(sector), 4)
        assert np.allclose(got, want[:4], atol=1e-9)
    assert sector_spectrum(loaded.hamiltonian, SectorSpec(ne), 1)[0][0] == pytest.approx(
        loaded.metadata["e_fci"], abs=1e-8)


def test_sector_indices():
    assert sector_indices(3, 1).tolist() == [1, 2, 4]
    with pytest.raises(ValueError):
        sector_indices(3, 4)


def test_restricted_matrix_rejects_number_violation():
    h = PauliSum.from_terms({"XI": 1.0})
    with pytest.raises(ValueError, match="particle number"):
        restricted_matrix(h, sector_indices(2, 1))


def test_eigenstate_phase_convention(h2):
    _, s = exact_eigenstate(h2, SectorSpec(2))
    first = s.amplitudes[np.nonzero(np.abs(s.amplitudes) > 1e-12)[0][0]]
    assert first.imag == pytest.approx(0) and first.real > 0


def test_cisd_basis_counts():
    basis = cisd_basis("1100")
    assert len(basis) == 6  # every 2-electron determinant on 4 orbitals
    assert int("1100", 2) in basis
    assert len(cisd_basis("11110000")) == 1 + 16 + 36


def test_cisd_equals_fci_for_two_electrons(h2):
    s = cisd_state(h2, "1100")
    assert expectation(s, h2).real == pytest.approx(H2_E_GROUND, abs=1e-10)


def _oracle_cisd_energy(path, hf):
    dense = load_integrals_dense(path)
    n = len(hf)
    ref = int(hf, 2)
    dets = [k for k in range(2 ** n) if bin(k).count("1") == hf.count("1") and bin(k ^ ref).count("1") <= 4]
    return np.linalg.eigvalsh(dense[np.ix_(dets, dets)])[0]


@pytest.mark.parametrize("path", H4_CHAIN[:2], ids=lambda p: p.stem)
def test_cisd_projected_diagonalisation(path):
    loaded = load_hamiltonian_full(path)
    s = cisd_state(loaded.hamiltonian, loaded.hf_occupation)
    e = expectation(s, loaded.hamiltonian).real
    assert e == pytest.approx(_oracle_cisd_energy(path, loaded.hf_occupation), abs=1e-9)
    assert abs(s.amplitudes[int(loaded.hf_occupation, 2)]) > 0.1
    assert e >= loaded.metadata["e_fci"] - 1e-10


def test_cisd_rejects_bad_occupation(h2):
    with pytest.raises(ValueError, match="occupation"):
        cisd_state(h2, "1120")


def test_basis_probabilities_y_rotation():
    plus_i = Statevector.from_amplitudes([1, 1j])
    assert np.allclose(basis_probabilities(plus_i, "Y"), [1, 0])
    assert np.allclose(basis_probabilities(plus_i, "X"), [0.5, 0.5])
    plus = Statevector.from_amplitudes([1, 1])
    assert np.allclose(basis_probabilities(plus, "X"), [1, 0])


def test_basis_probabilities_reproduce_pauli_expectations():
    s = random_state(3, 5)
    for label in ("XYZ", "YYX", "ZXZ"):
        p = basis_probabilities(s, label)
        signs = np.array([(-1) ** bin(k).count("1") for k in range(8)])
        assert p @ signs == pytest.approx(np.vdot(s.amplitudes, pauli_dense(label) @ s.amplitudes).real)


def test_sampling_frequencies_within_five_sigma(rng):
    s = random_state(2, 9)
    shots = 20000
    bits = sample_in_basis(s, "XY", shots, rng)
    idx = bits[:, 0] * 2 + bits[:, 1]
    freq = np.bincount(idx, minlength=4) / shots
    p = basis_probabilities(s, "XY")
    assert np.all(np.abs(freq - p) <= 5 * np.sqrt(p * (1 - p) / shots) + 1e-12)


def test_sampling_rejects_bad_input(rng):
    s = random_state(2, 0)
    with pytest.raises(ValueError):
        sample_in_basis(s, "XQ", 10, rng)
    with pytest.raises(ValueError):
        sample_in_basis(s, "XY", 0, rng)
