"""Pauli strings, weighted Pauli sums and the Jordan-Wigner map.

A Pauli string on ``n`` qubits is stored as two bitmasks ``(x, z)``; qubit 0
is the leftmost character of the text form and the most significant bit of
each mask, so ``"XIZY"`` has ``x = 0b1001`` and ``z = 0b0011``.  The letter on
a qubit is ``X`` for (1, 0), ``Z`` for (0, 1) and ``Y`` for (1, 1), with
``Y = i X Z``.

:class:`PauliSum` keeps its terms as parallel numpy arrays sorted by the
packed key ``x << n | z`` so that products of large sums are vectorised.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

PRUNE = 1e-12
LETTERS = "IXYZ"
_XZ = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_PHASES = np.array([1, 1j, -1, -1j])


def _popcount(a):
    return np.bitwise_count(a).astype(np.int64)


@dataclass(frozen=True, order=True)
class PauliString:
    n_qubits: int
    x: int
    z: int

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        full = (1 << self.n_qubits) - 1
        if self.x & ~full or self.z & ~full:
            raise ValueError("mask wider than n_qubits")

    @classmethod
    def from_label(cls, label: str) -> PauliString:
        x = z = 0
        for ch in label:
            try:
                bx, bz = _XZ[ch]
            except KeyError:
                raise ValueError(f"invalid Pauli letter {ch!r} in {label!r}") from None
            x = (x << 1) | bx
            z = (z << 1) | bz
        return cls(len(label), x, z)

    @classmethod
    def identity(cls, n_qubits: int) -> PauliString:
        return cls(n_qubits, 0, 0)

    @property
    def label(self) -> str:
        out = []
        for i in range(self.n_qubits):
            bit = self.n_qubits - 1 - i
            out.append("IXZY"[((self.x >> bit) & 1) | (((self.z >> bit) & 1) << 1)])
        return "".join(out)

    @property
    def letters(self) -> str:
        return self.label

    @property
    def key(self) -> int:
        return (self.x << self.n_qubits) | self.z

    @property
    def support_mask(self) -> int:
        return self.x | self.z

    @property
    def support(self) -> tuple[int, ...]:
        m = self.support_mask
        return tuple(i for i in range(self.n_qubits) if (m >> (self.n_qubits - 1 - i)) & 1)

    @property
    def weight(self) -> int:
        return bin(self.support_mask).count("1")

    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    def __str__(self) -> str:
        return self.label

    def __repr__(self) -> str:
        return f"PauliString({self.label!r})"


def pauli_mul(a: PauliString, b: PauliString) -> tuple[complex, PauliString]:
    """Product ``a @ b`` as ``(phase, string)`` with phase in {1, -1, i, -i}."""
    if a.n_qubits != b.n_qubits:
        raise ValueError(f"qubit-count mismatch: {a.n_qubits} vs {b.n_qubits}")
    x = a.x ^ b.x
    z = a.z ^ b.z
    e = (_pc(a.x & a.z) + _pc(b.x & b.z) + 2 * _pc(a.z & b.x) - _pc(x & z)) % 4
    return complex(_PHASES[e]), PauliString(a.n_qubits, x, z)


def _pc(v: int) -> int:
    return bin(v).count("1")


class PauliSum:
    """Immutable weighted sum of Pauli strings with complex coefficients."""

    __slots__ = ("n_qubits", "_x", "_z", "_c")

    def __init__(self, n_qubits: int, x=(), z=(), coeffs=(), *, collect: bool = True):
        if n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        self.n_qubits = n_qubits
        x = np.asarray(x, dtype=np.int64).ravel()
        z = np.asarray(z, dtype=np.int64).ravel()
        c = np.asarray(coeffs, dtype=np.complex128).ravel()
        if not (x.shape == z.shape == c.shape):
            raise ValueError("mask and coefficient arrays differ in length")
        if collect:
            x, z, c = _collect(n_qubits, x, z, c)
        for arr in (x, z, c):
            arr.setflags(write=False)
        self._x, self._z, self._c = x, z, c

    # construction -------------------------------------------------------

    @classmethod
    def zero(cls, n_qubits: int) -> PauliSum:
        return cls(n_qubits)

    @classmethod
    def identity(cls, n_qubits: int, coeff: complex = 1.0) -> PauliSum:
        return cls(n_qubits, [0], [0], [coeff])

    @classmethod
    def from_terms(cls, terms: Mapping[str | PauliString, complex] | Iterable[tuple[str | PauliString, complex]],
                   n_qubits: int | None = None) -> PauliSum:
        items = terms.items() if isinstance(terms, Mapping) else terms
        strings, coeffs = [], []
        for p, c in items:
            ps = PauliString.from_label(p) if isinstance(p, str) else p
            strings.append(ps)
            coeffs.append(c)
        if n_qubits is None:
            if not strings:
                raise ValueError("n_qubits required for an empty sum")
            n_qubits = strings[0].n_qubits
        if any(s.n_qubits != n_qubits for s in strings):
            raise ValueError("terms have mixed qubit counts")
        return cls(n_qubits, [s.x for s in strings], [s.z for s in strings], coeffs)

    # views --------------------------------------------------------------

    @property
    def xs(self) -> np.ndarray:
        return self._x

    @property
    def zs(self) -> np.ndarray:
        return self._z

    @property
    def coeffs(self) -> np.ndarray:
        return self._c

    @property
    def keys(self) -> np.ndarray:
        return (self._x << self.n_qubits) | self._z

    @property
    def strings(self) -> list[PauliString]:
        return [PauliString(self.n_qubits, int(x), int(z)) for x, z in zip(self._x, self._z)]

    @property
    def terms(self) -> dict[PauliString, complex]:
        return {s: complex(c) for s, c in zip(self.strings, self._c)}

    def __len__(self) -> int:
        return len(self._c)

    def __iter__(self):
        return iter(self.terms.items())

    def coeff(self, p: str | PauliString) -> complex:
        ps = PauliString.from_label(p) if isinstance(p, str) else p
        hit = np.nonzero((self._x == ps.x) & (self._z == ps.z))[0]
        return complex(self._c[hit[0]]) if len(hit) else 0j

    def identity_coeff(self) -> complex:
        return self.coeff(PauliString.identity(self.n_qubits))

    def without_identity(self) -> PauliSum:
        keep = (self._x != 0) | (self._z != 0)
        return PauliSum(self.n_qubits, self._x[keep], self._z[keep], self._c[keep], collect=False)

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        return bool(np.all(np.abs(self._c.imag) <= tol))

    def one_norm(self, include_identity: bool = False) -> float:
        s = self if include_identity else self.without_identity()
        return float(np.abs(s._c).sum())

    # algebra ------------------------------------------------------------

    def _check(self, other: PauliSum):
        if self.n_qubits != other.n_qubits:
            raise ValueError(f"qubit-count mismatch: {self.n_qubits} vs {other.n_qubits}")

    def __add__(self, other: PauliSum) -> PauliSum:
        if not isinstance(other, PauliSum):
            return NotImplemented
        self._check(other)
        return PauliSum(self.n_qubits, np.concatenate([self._x, other._x]),
                        np.concatenate([self._z, other._z]), np.concatenate([self._c, other._c]))

    def __sub__(self, other: PauliSum) -> PauliSum:
        return self + (-1.0) * other

    def __neg__(self) -> PauliSum:
        return (-1.0) * self

    def __mul__(self, scalar) -> PauliSum:
        if isinstance(scalar, PauliSum):
            return sum_mul(self, scalar)
        return PauliSum(self.n_qubits, self._x, self._z, self._c * complex(scalar))

    __rmul__ = __mul__

    def __matmul__(self, other: PauliSum) -> PauliSum:
        return sum_mul(self, other)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PauliSum):
            return NotImplemented
        return (self.n_qubits == other.n_qubits and len(self) == len(other)
                and np.array_equal(self._x, other._x) and np.array_equal(self._z, other._z)
                and np.array_equal(self._c, other._c))

    def allclose(self, other: PauliSum, atol: float = 1e-10) -> bool:
        diff = self - other
        return bool(np.all(np.abs(diff._c) <= atol))

    def __repr__(self) -> str:
        body = " + ".join(f"({c.real:.6g}{c.imag:+.6g}j)*{s.label}" for s, c in zip(self.strings, self._c))
        return f"PauliSum({body or '0'}, n_qubits={self.n_qubits})"


def _collect(n, x, z, c):
    if len(c) == 0:
        return x, z, c
    keys = (x << n) | z
    uniq, inv = np.unique(keys, return_inverse=True)
    acc = np.zeros(len(uniq), dtype=np.complex128)
    np.add.at(acc, inv, c)
    keep = np.abs(acc) >= PRUNE
    uniq = uniq[keep]
    mask = (1 << n) - 1
    return uniq >> n, uniq & mask, acc[keep]


def sum_mul(a: PauliSum, b: PauliSum) -> PauliSum:
    """Distribute the Pauli product over all term pairs and collect."""
    a._check(b)
    if len(a) == 0 or len(b) == 0:
        return PauliSum.zero(a.n_qubits)
    xa, za = a.xs[:, None], a.zs[:, None]
    xb, zb = b.xs[None, :], b.zs[None, :]
    x = xa ^ xb
    z = za ^ zb
    e = (_popcount(xa & za) + _popcount(xb & zb) + 2 * _popcount(za & xb) - _popcount(x & z)) % 4
    c = _PHASES[e] * (a.coeffs[:, None] * b.coeffs[None, :])
    return PauliSum(a.n_qubits, x.ravel(), z.ravel(), c.ravel())


def adjoint(a: PauliSum) -> PauliSum:
    return PauliSum(a.n_qubits, a.xs, a.zs, np.conj(a.coeffs), collect=False)


# Jordan-Wigner ---------------------------------------------------------------

Ladder = tuple[int, bool]


@dataclass(frozen=True)
class LadderOperatorProduct:
    """Ordered product of fermionic ladder operators, ``(orbital, dagger)`` pairs."""

    factors: tuple[Ladder, ...] = ()

    @classmethod
    def parse(cls, spec: Sequence[Sequence]) -> LadderOperatorProduct:
        return cls(tuple((int(p), bool(d)) for p, d in spec))

    @property
    def particle_change(self) -> int:
        return sum(1 if d else -1 for _, d in self.factors)

    def __str__(self) -> str:
        if not self.factors:
            return "1"
        return " ".join(f"a{p}^" if d else f"a{p}" for p, d in self.factors)


def jw_ladder(p: int, dagger: bool, n: int) -> PauliSum:
    """``a_p -> Z^{(p)} (X_p + iY_p)/2`` and ``a_p^ -> Z^{(p)} (X_p - iY_p)/2``."""
    if not 0 <= p < n:
        raise ValueError(f"orbital index {p} out of range for {n} qubits")
    bit = 1 << (n - 1 - p)
    zstring = 0
    for q in range(p):
        zstring |= 1 << (n - 1 - q)
    sign = -1 if dagger else 1
    return PauliSum(n, [bit, bit], [zstring, zstring | bit], [0.5, 0.5j * sign])


def jw_product(ops: LadderOperatorProduct, n: int) -> PauliSum:
    out = PauliSum.identity(n)
    for p, dagger in ops.factors:
        out = sum_mul(out, jw_ladder(p, dagger, n))
    return out
