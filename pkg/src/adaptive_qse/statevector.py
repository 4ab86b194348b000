"""Dense statevector backend: sector diagonalisation, CISD, expectations, sampling.

Basis index convention: qubit 0 is the most significant bit, matching the
left-to-right text form of Pauli strings and ``kron(P_0, P_1, ...)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from .pauli import PauliSum

DENSE_LIMIT = 14
BASIS_CODES = {"X": 1, "Y": 2, "Z": 3}

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
# (|0> + i|1>)/sqrt2 -> |0>: H @ Sdg
_HSDG = _H @ np.diag([1, -1j])
_ROTATIONS = {1: _H, 2: _HSDG, 3: None}


@dataclass(frozen=True)
class Statevector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128).ravel()
        if amps.shape != (1 << self.n_qubits,):
            raise ValueError(f"expected {1 << self.n_qubits} amplitudes, got {amps.shape[0]}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-10:
            raise ValueError(f"state not normalised (norm {norm})")
        amps = amps.copy()
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_amplitudes(cls, amps, normalize: bool = True) -> Statevector:
        amps = np.asarray(amps, dtype=np.complex128).ravel()
        n = int(round(np.log2(len(amps))))
        if normalize:
            amps = amps / np.linalg.norm(amps)
        return cls(n, amps)

    @classmethod
    def basis_state(cls, bits: str) -> Statevector:
        n = len(bits)
        amps = np.zeros(1 << n, dtype=complex)
        amps[int(bits, 2)] = 1.0
        return cls(n, amps)

    def overlap(self, other: Statevector) -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))


def _parity(a):
    return (np.bitwise_count(a) & 1).astype(np.int64)


def _term_action(n, x, z, cols):
    """Rows and phases of ``P|col>`` for every column index in ``cols``."""
    e = int(np.bitwise_count(np.int64(x & z))) % 4
    phase = (1j) ** e * (1 - 2 * _parity(cols & z))
    return cols ^ x, phase


def dense_matrix(h: PauliSum, limit: int = DENSE_LIMIT) -> np.ndarray:
    n = h.n_qubits
    if n > limit:
        raise ValueError(f"{n} qubits exceeds the dense limit of {limit}")
    dim = 1 << n
    cols = np.arange(dim, dtype=np.int64)
    m = np.zeros((dim, dim), dtype=np.complex128)
    for x, z, c in zip(h.xs, h.zs, h.coeffs):
        rows, ph = _term_action(n, int(x), int(z), cols)
        m[rows, cols] += c * ph
    return m


def apply(h: PauliSum, amps: np.ndarray) -> np.ndarray:
    """``h @ amps`` term by term without forming the dense matrix."""
    n = h.n_qubits
    cols = np.arange(1 << n, dtype=np.int64)
    out = np.zeros(1 << n, dtype=np.complex128)
    for x, z, c in zip(h.xs, h.zs, h.coeffs):
        rows, ph = _term_action(n, int(x), int(z), cols)
        out[rows] += c * ph * amps
    return out


def expectation(s: Statevector, o: PauliSum) -> complex:
    if s.n_qubits != o.n_qubits:
        raise ValueError(f"qubit-count mismatch: state {s.n_qubits}, operator {o.n_qubits}")
    return complex(np.vdot(s.amplitudes, apply(o, s.amplitudes)))


def pauli_expectations(s: Statevector, xs: np.ndarray, zs: np.ndarray) -> np.ndarray:
    """Real expectations of many Pauli strings at once (vectorised over terms)."""
    n = s.n_qubits
    psi = s.amplitudes
    cols = np.arange(1 << n, dtype=np.int64)
    out = np.empty(len(xs))
    chunk = max(1, (1 << 22) >> n)
    for lo in range(0, len(xs), chunk):
        x = np.asarray(xs[lo:lo + chunk], dtype=np.int64)[:, None]
        z = np.asarray(zs[lo:lo + chunk], dtype=np.int64)[:, None]
        ph = (1j) ** (np.bitwise_count(x & z).astype(np.int64) % 4) * (1 - 2 * _parity(cols[None, :] & z))
        val = np.sum(np.conj(psi[cols[None, :] ^ x]) * ph * psi[None, :], axis=1)
        out[lo:lo + chunk] = val.real
    return out


# sectors ---------------------------------------------------------------------

@dataclass(frozen=True)
class SectorSpec:
    n_electrons: int


def sector_indices(n_qubits: int, n_electrons: int) -> np.ndarray:
    if not 0 <= n_electrons <= n_qubits:
        raise ValueError(f"no sector with {n_electrons} electrons on {n_qubits} qubits")
    idx = np.arange(1 << n_qubits, dtype=np.int64)
    return idx[np.bitwise_count(idx) == n_electrons]


def restricted_matrix(h: PauliSum, basis: np.ndarray, leak_tol: float | None = 1e-8) -> np.ndarray:
    """Matrix of ``h`` on the span of computational states ``basis``.

    With ``leak_tol`` set, fail when ``h`` maps the span outside its
    particle-number sector by more than that amount.
    """
    dim = len(basis)
    pos = np.full(1 << h.n_qubits, -1, dtype=np.int64)
    pos[basis] = np.arange(dim)
    m = np.zeros((dim, dim), dtype=np.complex128)
    weight = int(np.bitwise_count(basis[0])) if dim else 0
    leak_keys, leak_vals = [], []
    cols = np.arange(dim)
    for x, z, c in zip(h.xs, h.zs, h.coeffs):
        rows, ph = _term_action(h.n_qubits, int(x), int(z), basis)
        r = pos[rows]
        inside = r >= 0
        np.add.at(m, (r[inside], cols[inside]), c * ph[inside])
        if leak_tol is not None:
            out = ~inside & (np.bitwise_count(rows) != weight)
            if np.any(out):
                leak_keys.append(rows[out] * dim + cols[out])
                leak_vals.append(c * ph[out])
    if leak_keys:
        keys, inv = np.unique(np.concatenate(leak_keys), return_inverse=True)
        acc = np.zeros(len(keys), dtype=np.complex128)
        np.add.at(acc, inv, np.concatenate(leak_vals))
        if np.max(np.abs(acc)) > leak_tol:
            raise ValueError("Hamiltonian does not conserve particle number")
    return m


def _phase_fix(v: np.ndarray) -> np.ndarray:
    nz = np.nonzero(np.abs(v) > 1e-12)[0]
    if len(nz):
        a = v[nz[0]]
        v = v * (abs(a) / a)
    return v


def _embed(n, basis, vec) -> Statevector:
    amps = np.zeros(1 << n, dtype=np.complex128)
    amps[basis] = vec
    return Statevector(n, amps / np.linalg.norm(amps))


def sector_spectrum(h: PauliSum, sector: SectorSpec, count: int | None = None):
    """Ascending eigenpairs of ``h`` in a particle-number sector.

    Returns ``(energies, states)``; degenerate vectors come out in the
    eigensolver's order with the first nonzero amplitude made real positive.
    """
    basis = sector_indices(h.n_qubits, sector.n_electrons)
    m = restricted_matrix(h, basis)
    m = 0.5 * (m + m.conj().T)
    w, v = np.linalg.eigh(m)
    count = len(w) if count is None else min(count, len(w))
    states = [_embed(h.n_qubits, basis, _phase_fix(v[:, k])) for k in range(count)]
    return w[:count], states


def exact_eigenstate(h: PauliSum, sector: SectorSpec, which: int = 0) -> tuple[float, Statevector]:
    basis = sector_indices(h.n_qubits, sector.n_electrons)
    if which >= len(basis):
        raise ValueError(f"rank {which} exceeds sector dimension {len(basis)}")
    w, states = sector_spectrum(h, sector, count=which + 1)
    return float(w[which]), states[which]


def cisd_basis(hf_occupation: str) -> np.ndarray:
    n = len(hf_occupation)
    hf = int(hf_occupation, 2)
    occ = [i for i, b in enumerate(hf_occupation) if b == "1"]
    virt = [i for i, b in enumerate(hf_occupation) if b == "0"]
    out = {hf}
    for rank in (1, 2):
        for holes in combinations(occ, rank):
            for parts in combinations(virt, rank):
                k = hf
                for q in holes + parts:
                    k ^= 1 << (n - 1 - q)
                out.add(k)
    return np.array(sorted(out), dtype=np.int64)


def cisd_state(h: PauliSum, hf_occupation: str) -> Statevector:
    """Lowest eigenvector of ``h`` within singles and doubles of the HF determinant."""
    if len(hf_occupation) != h.n_qubits or set(hf_occupation) - {"0", "1"}:
        raise ValueError(f"bad occupation string {hf_occupation!r}")
    basis = cisd_basis(hf_occupation)
    if len(basis) == 0:
        raise ValueError("empty CISD basis")
    m = restricted_matrix(h, basis)
    m = 0.5 * (m + m.conj().T)
    _, v = np.linalg.eigh(m)
    return _embed(h.n_qubits, basis, _phase_fix(v[:, 0]))


# sampling --------------------------------------------------------------------

def basis_codes(basis: str | Sequence) -> np.ndarray:
    if isinstance(basis, str):
        try:
            return np.array([BASIS_CODES[ch] for ch in basis], dtype=np.uint8)
        except KeyError as err:
            raise ValueError(f"invalid basis letter {err.args[0]!r}") from None
    codes = np.asarray(basis, dtype=np.uint8)
    if np.any((codes < 1) | (codes > 3)):
        raise ValueError("basis codes must be 1 (X), 2 (Y) or 3 (Z)")
    return codes


def rotate_to_basis(amps: np.ndarray, codes: np.ndarray) -> np.ndarray:
    n = len(codes)
    t = np.asarray(amps, dtype=np.complex128).reshape((2,) * n)
    for q, code in enumerate(codes):
        u = _ROTATIONS[int(code)]
        if u is not None:
            t = np.moveaxis(np.tensordot(u, t, axes=([1], [q])), 0, q)
    return t.reshape(-1)


def basis_probabilities(s: Statevector, basis) -> np.ndarray:
    codes = basis_codes(basis)
    if len(codes) != s.n_qubits:
        raise ValueError("basis length differs from qubit count")
    p = np.abs(rotate_to_basis(s.amplitudes, codes)) ** 2
    return p / p.sum()


def index_to_bits(idx: np.ndarray, n: int) -> np.ndarray:
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((np.asarray(idx, dtype=np.int64)[:, None] >> shifts) & 1).astype(np.uint8)


def sample_in_basis(s: Statevector, basis, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``shots`` outcome bitstrings, shape ``(shots, n)``; bit 1 means eigenvalue -1."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    p = basis_probabilities(s, basis)
    idx = rng.choice(len(p), size=shots, p=p)
    return index_to_bits(idx, s.n_qubits)
