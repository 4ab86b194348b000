"""Pauli expectation estimators over measurement outcomes.

Outcomes are tallied per distinct basis into a histogram over the ``2^n``
outcome bitstrings.  A Walsh-Hadamard transform of each histogram gives, for
every support mask at once, the sum over shots of ``(-1)^{parity}``, so any
Pauli hit by that basis is read off by a lookup.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..pauli import PauliString
from .base import INVERSE_WEIGHTED, LocalBias, MeasurementPlan, Outcomes, letter_codes
from .derandomized import hit_matrix


@dataclass(frozen=True)
class BasisCounts:
    """Histogram of outcomes per distinct basis: ``counts[b, k]`` shots of basis ``b`` gave index ``k``."""

    bases: np.ndarray  # (B, n) codes
    counts: np.ndarray  # (B, 2^n) int

    @property
    def shots(self) -> int:
        return int(self.counts.sum())

    @property
    def n_qubits(self) -> int:
        return self.bases.shape[1]

    @classmethod
    def from_outcomes(cls, outcomes: Outcomes) -> BasisCounts:
        n = outcomes.bases.shape[1]
        packed = outcomes.bases.astype(np.int64) @ (4 ** np.arange(n, dtype=np.int64))
        _, first, inv = np.unique(packed, return_index=True, return_inverse=True)
        idx = outcomes.bits.astype(np.int64) @ (1 << np.arange(n - 1, -1, -1, dtype=np.int64))
        counts = np.zeros((len(first), 1 << n), dtype=np.int64)
        np.add.at(counts, (inv.ravel(), idx), 1)
        return cls(outcomes.bases[first], counts)


def _fwht(a: np.ndarray) -> np.ndarray:
    """Walsh-Hadamard transform along the last axis (length ``2^n``)."""
    a = np.array(a, dtype=float)
    rows, dim = a.shape
    h = 1
    while h < dim:
        a = a.reshape(rows, -1, 2, h)
        a = np.concatenate([a[:, :, :1] + a[:, :, 1:], a[:, :, :1] - a[:, :, 1:]], axis=2)
        h *= 2
    return a.reshape(rows, dim)


def _parity_sums(data: BasisCounts, xs, zs, chunk_elems: int = 1 << 22):
    """Per Pauli: eigenvalue products summed over hitting shots, and hit counts.

    Bases are processed in chunks so that neither the transformed histograms
    nor the basis-by-Pauli hit matrix is ever held whole.
    """
    n = data.n_qubits
    xs = np.asarray(xs, dtype=np.int64)
    zs = np.asarray(zs, dtype=np.int64)
    masks = xs | zs
    per_basis = data.counts.sum(axis=1)
    sums = np.zeros(len(xs))
    hits = np.zeros(len(xs), dtype=np.int64)
    step = max(1, chunk_elems // max(1 << n, len(xs)))
    for lo in range(0, len(data.bases), step):
        sl = slice(lo, lo + step)
        hit = hit_matrix(data.bases[sl], xs, zs)
        W = _fwht(data.counts[sl])[:, masks]
        sums += np.einsum("bp,bp->p", W, hit)
        hits += per_basis[sl] @ hit
    return sums, hits


@dataclass(frozen=True)
class Source:
    """Outcomes of one plan together with the plan that generated them."""

    data: BasisCounts
    plan: MeasurementPlan


def as_counts(records) -> BasisCounts:
    if isinstance(records, BasisCounts):
        return records
    if isinstance(records, Outcomes):
        return BasisCounts.from_outcomes(records)
    return BasisCounts.from_outcomes(Outcomes.from_records(records))


def estimate_many(sources: list[Source], xs, zs) -> tuple[np.ndarray, np.ndarray]:
    """Pooled estimates and hit counts for the Paulis ``(xs, zs)``.

    Inverse-weighted plans (uniform_cs, lbcs): the summed hit values divided
    by the expected hit count ``sum_p N_p prod_i beta_p,i(P_i)``.  For one
    plan this is the usual ``value * prod 1/beta`` average; for several plans
    with different biases it is the balance-heuristic combination, so a plan
    that almost never hits a Pauli cannot inject huge inverse weights.  Other
    plans use the mean over hitting shots.  A Pauli with no hits estimates to 0.
    """
    xs = np.asarray(xs, dtype=np.int64)
    zs = np.asarray(zs, dtype=np.int64)
    if np.any((xs == 0) & (zs == 0)):
        raise ValueError("the identity has expectation 1 and is never estimated")
    kinds = {s.plan.kind in INVERSE_WEIGHTED for s in sources}
    if len(kinds) != 1:
        raise ValueError("cannot pool inverse-weighted and hit-mean plans")
    inverse = kinds.pop()
    total = np.zeros(len(xs))
    hits = np.zeros(len(xs), dtype=np.int64)
    expected = np.zeros(len(xs))
    for src in sources:
        sums, h = _parity_sums(src.data, xs, zs)
        total += sums
        hits += h
        if inverse:
            bias = src.plan.generator
            if not isinstance(bias, LocalBias):
                raise ValueError("inverse-weighted plan without its LocalBias")
            expected += src.data.shots / bias.inverse_weights(letter_codes(xs, zs, src.data.n_qubits))
    denom = expected if inverse else hits
    est = np.divide(total, denom, out=np.zeros_like(total), where=denom > 0)
    return est, hits


def estimate_pauli(records, p: PauliString | str, plan: MeasurementPlan) -> tuple[float, int]:
    """Estimate ``<p>`` from one plan's records; returns ``(estimate, hits)``."""
    ps = PauliString.from_label(p) if isinstance(p, str) else p
    if ps.is_identity():
        raise ValueError("the identity has expectation 1 and is never estimated")
    est, hits = estimate_many([Source(as_counts(records), plan)], [ps.x], [ps.z])
    return float(est[0]), int(hits[0])

