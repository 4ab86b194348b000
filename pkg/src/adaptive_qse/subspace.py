"""Subspace matrix elements and dressed operators as Pauli sums."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .pauli import LadderOperatorProduct, PauliSum, adjoint, jw_product, sum_mul
from .statevector import Statevector, dense_matrix


@dataclass(frozen=True)
class ExcitationSet:
    operators: tuple[LadderOperatorProduct, ...]
    n_qubits: int
    images: tuple[PauliSum, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.operators:
            raise ValueError("empty excitation set")
        images = tuple(jw_product(op, self.n_qubits) for op in self.operators)
        for op, im in zip(self.operators, images):
            if len(im) == 0:
                raise ValueError(f"operator {op} maps to zero")
        object.__setattr__(self, "images", images)

    def __len__(self) -> int:
        return len(self.operators)

    @property
    def particle_change(self) -> int:
        changes = {op.particle_change for op in self.operators}
        if len(changes) != 1:
            raise ValueError("excitation operators change particle number inconsistently")
        return changes.pop()

    @classmethod
    def from_products(cls, products: Sequence[LadderOperatorProduct], n_qubits: int,
                      dedupe: bool = True) -> ExcitationSet:
        """Drop products with a zero image and (optionally) scalar multiples of earlier ones."""
        kept, seen = [], set()
        for op in products:
            im = jw_product(op, n_qubits)
            if len(im) == 0:
                continue
            if dedupe:
                sig = _signature(im)
                if sig in seen:
                    continue
                seen.add(sig)
            kept.append(op)
        return cls(tuple(kept), n_qubits)


def _signature(im: PauliSum):
    c = im.coeffs / im.coeffs[0]
    return tuple(im.keys.tolist()), tuple(np.round(c, 10).tolist())


def singles_annihilation(n_qubits: int) -> ExcitationSet:
    return ExcitationSet(tuple(LadderOperatorProduct(((p, False),)) for p in range(n_qubits)), n_qubits)


def two_plus_one(n_qubits: int) -> ExcitationSet:
    """``a_i a_j^ a_k`` for all index triples, minus zero images and trivial duplicates."""
    prods = [LadderOperatorProduct(((i, False), (j, True), (k, False)))
             for i in range(n_qubits) for j in range(n_qubits) for k in range(n_qubits)]
    return ExcitationSet.from_products(prods, n_qubits)


@dataclass(frozen=True)
class MatrixElementExpansion:
    """Matrix elements ``H~_ij = <O_i^ H O_j>`` and ``S~_ij = <O_i^ O_j>`` as functions of Pauli values.

    ``h_paulis`` / ``s_paulis`` are the sorted packed keys of the non-identity
    strings appearing in any H or S element; ``union_keys`` is their union.
    The per-element Pauli sums are built on demand (:meth:`h_element`), since
    storing all ``2 d^2`` of them is what limits large subspaces.
    """

    n_qubits: int
    hamiltonian: PauliSum = field(repr=False)
    images: tuple[PauliSum, ...] = field(repr=False)
    h_paulis: np.ndarray = field(repr=False)
    s_paulis: np.ndarray = field(repr=False)
    union_keys: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.images)

    @property
    def union_paulis(self):
        from .pauli import PauliString
        mask = (1 << self.n_qubits) - 1
        return [PauliString(self.n_qubits, int(k) >> self.n_qubits, int(k) & mask) for k in self.union_keys]

    def h_element(self, i: int, j: int) -> PauliSum:
        return sum_mul(adjoint(self.images[i]), sum_mul(self.hamiltonian, self.images[j]))

    def s_element(self, i: int, j: int) -> PauliSum:
        return sum_mul(adjoint(self.images[i]), self.images[j])

    @cached_property
    def h_elements(self) -> tuple[tuple[PauliSum, ...], ...]:
        return tuple(tuple(self.h_element(i, j) for j in range(self.dim)) for i in range(self.dim))

    @cached_property
    def s_elements(self) -> tuple[tuple[PauliSum, ...], ...]:
        return tuple(tuple(self.s_element(i, j) for j in range(self.dim)) for i in range(self.dim))

    @cached_property
    def _dense_ops(self) -> tuple[np.ndarray, np.ndarray]:
        """Stacks ``O_j`` and ``H O_j``, shape ``(d, 2^n, 2^n)``."""
        ops = np.stack([dense_matrix(o) for o in self.images])
        return ops, dense_matrix(self.hamiltonian) @ ops

    def assemble(self, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Build H~ and S~ from Pauli expectation ``values`` aligned with ``union_keys``.

        The values define ``rho = (I + sum_P v_P P) / 2^n``; then
        ``H~_ij = Tr(rho O_i^ H O_j)`` reproduces the Pauli-expanded element
        exactly, because every element is supported on ``union_keys`` and the
        identity (whose expectation is fixed at 1).
        """
        values = np.asarray(values, dtype=float)
        if values.shape != self.union_keys.shape:
            raise ValueError(f"expected {len(self.union_keys)} values, got {values.shape}")
        n = self.n_qubits
        mask = (1 << n) - 1
        rho = dense_matrix(PauliSum(n, self.union_keys >> n, self.union_keys & mask, values))
        rho = (rho + np.eye(1 << n)) / (1 << n)
        ops, h_ops = self._dense_ops
        d = self.dim
        flat = ops.reshape(d, -1).conj()
        h = flat @ (h_ops @ rho).reshape(d, -1).T
        s = flat @ (ops @ rho).reshape(d, -1).T
        return h, s


def expand_elements(h: PauliSum, ops: ExcitationSet, reduce_every: int = 256) -> MatrixElementExpansion:
    """Collect the Pauli support of every element, streaming so only keys are kept."""
    if h.n_qubits != ops.n_qubits:
        raise ValueError(f"qubit-count mismatch: H {h.n_qubits}, operators {ops.n_qubits}")
    imgs = ops.images
    adj = [adjoint(o) for o in imgs]
    h_ops = [sum_mul(h, o) for o in imgs]
    h_keys, s_keys = [np.zeros(0, np.int64)], [np.zeros(0, np.int64)]
    # element (j, i) is the adjoint of (i, j): same support
    for i in range(len(imgs)):
        for j in range(i, len(imgs)):
            h_keys.append(sum_mul(adj[i], h_ops[j]).keys)
            s_keys.append(sum_mul(adj[i], imgs[j]).keys)
            if len(h_keys) > reduce_every:
                h_keys = [np.unique(np.concatenate(h_keys))]
                s_keys = [np.unique(np.concatenate(s_keys))]
    h_keys = np.unique(np.concatenate(h_keys))
    s_keys = np.unique(np.concatenate(s_keys))
    h_keys, s_keys = h_keys[h_keys != 0], s_keys[s_keys != 0]
    return MatrixElementExpansion(h.n_qubits, h, imgs, h_keys, s_keys, np.union1d(h_keys, s_keys))


def _check_alpha(alpha, d):
    alpha = np.asarray(alpha, dtype=complex).ravel()
    if len(alpha) != d:
        raise ValueError(f"alpha has length {len(alpha)}, subspace dimension is {d}")
    if not np.all(np.isfinite(alpha)) or np.allclose(alpha, 0):
        raise ValueError("alpha must be finite and not all zero")
    return alpha


def _combine(coeffs, images, n) -> PauliSum:
    return PauliSum(n, np.concatenate([o.xs for o in images]), np.concatenate([o.zs for o in images]),
                    np.concatenate([c * o.coeffs for c, o in zip(coeffs, images)]))


def build_dressed(alpha, exp: MatrixElementExpansion, beta=None) -> tuple[PauliSum, PauliSum]:
    """``H_d = sum_ij conj(a_i) a_j O_i^ H O_j`` and ``S_d`` likewise, collected and pruned.

    Computed as ``A^ H A`` with ``A = sum_j a_j O_j``.  With ``beta`` the
    right-hand coefficients are ``beta_j`` instead, giving the cross block
    between two coefficient vectors.
    """
    alpha = _check_alpha(alpha, exp.dim)
    beta = alpha if beta is None else _check_alpha(beta, exp.dim)
    a = _combine(alpha, exp.images, exp.n_qubits)
    b = a if beta is alpha else _combine(beta, exp.images, exp.n_qubits)
    a_adj = adjoint(a)
    return sum_mul(a_adj, sum_mul(exp.hamiltonian, b)), sum_mul(a_adj, b)


def manifold_dressed(vectors, exp: MatrixElementExpansion) -> tuple[PauliSum, PauliSum]:
    """Dressed operators for a set of (degenerate) coefficient vectors.

    Columns ``A[:, k]`` span the target manifold.  Each Pauli gets the
    root-sum-square of its coefficients over all ``K^2`` blocks
    ``A_k^ H~ A_l``, so every entry of the projected ``K x K`` problem is
    covered.  For one column this is :func:`build_dressed` up to the phase of
    each coefficient, which measurement targets ignore.
    """
    A = np.asarray(vectors, dtype=complex)
    if A.ndim == 1:
        return build_dressed(A, exp)
    if A.shape[1] == 1:
        return build_dressed(A[:, 0], exp)
    out = []
    for which in (0, 1):
        parts = [build_dressed(A[:, k], exp, A[:, l])[which] for k in range(A.shape[1]) for l in range(A.shape[1])]
        sq = PauliSum(exp.n_qubits, np.concatenate([p.xs for p in parts]), np.concatenate([p.zs for p in parts]),
                      np.concatenate([np.abs(p.coeffs) ** 2 for p in parts]))
        out.append(PauliSum(exp.n_qubits, sq.xs, sq.zs, np.sqrt(sq.coeffs.real)))
    return out[0], out[1]


def exact_matrices(state: Statevector, exp: MatrixElementExpansion) -> tuple[np.ndarray, np.ndarray]:
    """Noiseless H~, S~ on ``state``, from the vectors ``O_j |psi>``."""
    ops, h_ops = exp._dense_ops
    psi = state.amplitudes
    v = ops @ psi
    return v.conj() @ (h_ops @ psi).T, v.conj() @ v.T


def rayleigh_quotient(alpha, h_tilde, s_tilde) -> float:
    alpha = np.asarray(alpha, dtype=complex).ravel()
    num = np.vdot(alpha, np.asarray(h_tilde) @ alpha)
    den = np.vdot(alpha, np.asarray(s_tilde) @ alpha)
    if abs(den) <= 1e-14:
        raise ValueError("vanishing denominator in Rayleigh quotient")
    q = num / den
    if abs(q.imag) > 1e-8 * max(1.0, abs(q.real)):
        raise ValueError(f"Rayleigh quotient has imaginary part {q.imag:.3e}; inputs not Hermitian")
    return float(q.real)
