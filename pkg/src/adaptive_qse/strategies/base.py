"""Targets, local biases, measurement plans and outcome records.

Per-qubit measurement letters are stored as uint8 codes 1 (X), 2 (Y), 3 (Z);
code 0 stands for the identity inside Pauli letter arrays.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from ..pauli import PauliString, PauliSum

CODE_TO_LETTER = "IXYZ"
LETTER_TO_CODE = {ch: i for i, ch in enumerate(CODE_TO_LETTER)}
KINDS = ("uniform_cs", "lbcs", "dcs", "ogm", "naive")
INVERSE_WEIGHTED = ("uniform_cs", "lbcs")


def letter_codes(xs, zs, n: int) -> np.ndarray:
    """Pauli masks -> (len, n) array of letter codes (0=I, 1=X, 2=Y, 3=Z)."""
    xs = np.asarray(xs, dtype=np.int64)
    zs = np.asarray(zs, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    xb = (xs[:, None] >> shifts) & 1
    zb = (zs[:, None] >> shifts) & 1
    # (x, z): (1,0)->X=1, (1,1)->Y=2, (0,1)->Z=3
    return np.where(xb == 1, 1 + zb, 3 * zb).astype(np.uint8)


def codes_to_masks(codes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(m, n) letter codes -> (x, z) masks."""
    codes = np.atleast_2d(codes).astype(np.int64)
    n = codes.shape[1]
    weights = 1 << np.arange(n - 1, -1, -1, dtype=np.int64)
    x = ((codes == 1) | (codes == 2)).astype(np.int64) @ weights
    z = ((codes == 2) | (codes == 3)).astype(np.int64) @ weights
    return x, z


def codes_to_text(codes) -> str:
    return "".join(CODE_TO_LETTER[int(c)] for c in codes)


def text_to_codes(text: str) -> np.ndarray:
    try:
        return np.array([LETTER_TO_CODE[ch] for ch in text], dtype=np.uint8)
    except KeyError as err:
        raise ValueError(f"invalid letter {err.args[0]!r} in {text!r}") from None


@dataclass(frozen=True)
class WeightedTarget:
    """Non-identity Pauli strings with nonnegative weights ``w_P = |c_P|``."""

    n_qubits: int
    xs: np.ndarray
    zs: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        for name in ("xs", "zs", "weights"):
            arr = np.asarray(getattr(self, name), dtype=float if name == "weights" else np.int64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if np.any(~np.isfinite(self.weights)) or np.any(self.weights < 0):
            raise ValueError("weights must be finite and nonnegative")
        if np.any((self.xs == 0) & (self.zs == 0)):
            raise ValueError("the identity is never a measurement target")

    @classmethod
    def from_pauli_sum(cls, op: PauliSum) -> WeightedTarget:
        s = op.without_identity()
        return cls(op.n_qubits, s.xs, s.zs, np.abs(s.coeffs))

    @classmethod
    def from_dict(cls, entries: dict[str, float]) -> WeightedTarget:
        strings = [PauliString.from_label(k) for k in entries]
        return cls(strings[0].n_qubits, [s.x for s in strings], [s.z for s in strings], list(entries.values()))

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def letters(self) -> np.ndarray:
        return letter_codes(self.xs, self.zs, self.n_qubits)

    @property
    def entries(self) -> dict[PauliString, float]:
        return {PauliString(self.n_qubits, int(x), int(z)): float(w)
                for x, z, w in zip(self.xs, self.zs, self.weights)}


@dataclass(frozen=True)
class LocalBias:
    """Per-qubit probabilities over (X, Y, Z), shape ``(n, 3)``."""

    beta: np.ndarray

    def __post_init__(self):
        b = np.array(self.beta, dtype=float)
        if b.ndim != 2 or b.shape[1] != 3:
            raise ValueError("beta must have shape (n_qubits, 3)")
        if np.any(b < 0) or np.any(np.abs(b.sum(axis=1) - 1) > 1e-9):
            raise ValueError("each row of beta must be a probability vector over X, Y, Z")
        b.setflags(write=False)
        object.__setattr__(self, "beta", b)

    @property
    def n_qubits(self) -> int:
        return self.beta.shape[0]

    def as_dicts(self) -> list[dict[str, float]]:
        return [dict(zip("XYZ", row.tolist())) for row in self.beta]

    def inverse_weights(self, letters: np.ndarray) -> np.ndarray:
        """``prod_{i in supp} 1/beta_i(P_i)`` for each row of Pauli letter codes."""
        with np.errstate(divide="ignore"):  # a zero-probability letter is never hit
            logb = np.concatenate([np.zeros((self.n_qubits, 1)), np.log(self.beta)], axis=1)
        rows = np.arange(self.n_qubits)[None, :]
        return np.exp(-logb[rows, letters.astype(np.int64)].sum(axis=1))


def uniform_bias(n: int) -> LocalBias:
    return LocalBias(np.full((n, 3), 1.0 / 3.0))


@dataclass(frozen=True)
class MeasurementPlan:
    """Bases to measure, one row per shot or, with ``repeats``, one row per batch.

    ``repeats[k]`` shots are taken in basis ``bases[k]``.  Shot order carries
    no information (outcomes are independent), so the two forms are
    interchangeable; the compressed one keeps 1e8-shot plans small.
    """

    kind: str
    bases: np.ndarray  # (rows, n) codes in {1, 2, 3}
    generator: object = None
    repeats: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown plan kind {self.kind!r}")
        b = np.array(self.bases, dtype=np.uint8)
        if b.ndim != 2 or len(b) == 0:
            raise ValueError("a plan needs at least one shot")
        if np.any((b < 1) | (b > 3)):
            raise ValueError("plan letters must be X, Y or Z")
        b.setflags(write=False)
        object.__setattr__(self, "bases", b)
        if self.repeats is not None:
            r = np.array(self.repeats, dtype=np.int64)
            if r.shape != (len(b),) or np.any(r < 0) or r.sum() == 0:
                raise ValueError("repeats must be nonnegative per row with a positive total")
            r.setflags(write=False)
            object.__setattr__(self, "repeats", r)

    @property
    def shots(self) -> int:
        return len(self.bases) if self.repeats is None else int(self.repeats.sum())

    @property
    def n_qubits(self) -> int:
        return self.bases.shape[1]

    def _row_weights(self) -> np.ndarray:
        return np.ones(len(self.bases), dtype=np.int64) if self.repeats is None else self.repeats

    def _row_groups(self):
        packed = self.bases.astype(np.int64) @ (4 ** np.arange(self.n_qubits, dtype=np.int64))
        _, first, inv = np.unique(packed, return_index=True, return_inverse=True)
        order = np.argsort(first, kind="stable")
        rank = np.empty_like(order)
        rank[order] = np.arange(len(order))
        return first[order], rank[inv.ravel()]

    def distinct_bases(self) -> tuple[np.ndarray, np.ndarray]:
        """``(unique_bases, shot_counts)`` in first-appearance order, zero-count bases dropped."""
        first, row_rank = self._row_groups()
        counts = np.bincount(row_rank, weights=self._row_weights(), minlength=len(first)).astype(np.int64)
        keep = counts > 0
        return self.bases[first[keep]], counts[keep]

    def shot_bases(self) -> np.ndarray:
        """One row per shot."""
        return self.bases if self.repeats is None else np.repeat(self.bases, self.repeats, axis=0)

    def to_text(self) -> str:
        return "".join(codes_to_text(b) + "\n" for b in self.shot_bases())


# product bases are enumerated (and sampled as one multinomial) up to this many
_ENUMERATE_LIMIT = 3 ** 12


def all_bases(n: int) -> np.ndarray:
    """Every product basis as letter codes, qubit 0 varying slowest."""
    return (np.indices((3,) * n).reshape(n, -1).T + 1).astype(np.uint8)


def plan_from_bias(bias: LocalBias, shots: int, rng: np.random.Generator, kind: str = "lbcs") -> MeasurementPlan:
    """Draw each shot's letters independently from ``bias``.

    For up to 12 qubits the per-basis shot counts are drawn as one
    multinomial over all ``3^n`` product bases, which has the same law.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    n = bias.n_qubits
    if 3 ** n <= _ENUMERATE_LIMIT:
        bases = all_bases(n)
        p = np.prod(bias.beta[np.arange(n)[None, :], bases.astype(np.int64) - 1], axis=1)
        counts = rng.multinomial(shots, p / p.sum())
        keep = counts > 0
        return MeasurementPlan(kind, bases[keep], bias, counts[keep])
    cum = np.cumsum(bias.beta, axis=1)
    u = rng.random((shots, n))
    codes = 1 + (u[:, :, None] >= cum[None, :, :2]).sum(axis=2)
    return MeasurementPlan(kind, codes.astype(np.uint8), bias)


@dataclass(frozen=True)
class OutcomeRecord:
    basis: str
    bits: str

    def __post_init__(self):
        if len(self.basis) != len(self.bits):
            raise ValueError("basis and bitstring lengths differ")

    def to_line(self) -> str:
        return f"{self.basis} {self.bits}"

    @classmethod
    def from_line(cls, line: str) -> OutcomeRecord:
        basis, bits = line.split()
        return cls(basis, bits)


@dataclass(frozen=True)
class Outcomes:
    """Per-shot outcomes as arrays: ``bases`` codes and ``bits`` (both ``(M, n)`` uint8)."""

    bases: np.ndarray
    bits: np.ndarray

    def __len__(self) -> int:
        return len(self.bases)

    def __iter__(self) -> Iterator[OutcomeRecord]:
        for b, k in zip(self.bases, self.bits):
            yield OutcomeRecord(codes_to_text(b), "".join(map(str, k.tolist())))

    @classmethod
    def from_records(cls, records: Iterable[OutcomeRecord]) -> Outcomes:
        records = list(records)
        bases = np.array([text_to_codes(r.basis) for r in records], dtype=np.uint8)
        bits = np.array([[int(c) for c in r.bits] for r in records], dtype=np.uint8)
        return cls(bases, bits)

    def to_text(self) -> str:
        return "".join(r.to_line() + "\n" for r in self)

    @classmethod
    def from_text(cls, text: str) -> Outcomes:
        return cls.from_records(OutcomeRecord.from_line(ln) for ln in text.splitlines() if ln.strip())
