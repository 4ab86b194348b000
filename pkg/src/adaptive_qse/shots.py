"""Execute measurement plans against a statevector, one rotation per distinct basis."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .statevector import Statevector, basis_probabilities, index_to_bits
from .strategies.base import MeasurementPlan, Outcomes
from .strategies.estimate import BasisCounts


@dataclass(frozen=True)
class ShotBatch:
    basis: np.ndarray
    count: int


def batches(plan: MeasurementPlan) -> list[ShotBatch]:
    uniq, counts = plan.distinct_bases()
    return [ShotBatch(b, int(c)) for b, c in zip(uniq, counts)]


def _streams(rng: np.random.Generator, n_batches: int) -> list[np.random.Generator]:
    """Independent generators keyed by (master seed, batch index)."""
    master = int(rng.integers(0, 2 ** 63))
    return [np.random.default_rng([master, k]) for k in range(n_batches)]


def _check(state: Statevector, plan: MeasurementPlan):
    if state.n_qubits != plan.n_qubits:
        raise ValueError(f"qubit-count mismatch: state {state.n_qubits}, plan {plan.n_qubits}")


def execute_plan(state: Statevector, plan: MeasurementPlan, rng: np.random.Generator) -> Outcomes:
    """One outcome record per shot, in plan order."""
    _check(state, plan)
    shot_bases = plan.shot_bases()
    uniq, counts = plan.distinct_bases()
    weights = 4 ** np.arange(plan.n_qubits, dtype=np.int64)
    _, which = np.unique(shot_bases.astype(np.int64) @ weights, return_inverse=True)
    _, uniq_which = np.unique(uniq.astype(np.int64) @ weights, return_inverse=True)
    streams = _streams(rng, len(uniq))
    bits = np.empty((plan.shots, state.n_qubits), dtype=np.uint8)
    for k, (basis, count) in enumerate(zip(uniq, counts)):
        p = basis_probabilities(state, basis)
        idx = streams[k].choice(len(p), size=int(count), p=p)
        bits[which.ravel() == uniq_which[k]] = index_to_bits(idx, state.n_qubits)
    return Outcomes(shot_bases.copy(), bits)


def execute_plan_counts(state: Statevector, plan: MeasurementPlan, rng: np.random.Generator) -> BasisCounts:
    """Same distribution as :func:`execute_plan`, returned as per-basis histograms."""
    _check(state, plan)
    uniq, counts = plan.distinct_bases()
    streams = _streams(rng, len(uniq))
    hist = np.empty((len(uniq), 1 << state.n_qubits), dtype=np.int64)
    for k, (basis, count) in enumerate(zip(uniq, counts)):
        hist[k] = streams[k].multinomial(int(count), basis_probabilities(state, basis))
    return BasisCounts(uniq, hist)
