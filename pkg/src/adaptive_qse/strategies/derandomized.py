"""Derandomised classical shadows: greedy confidence-bound minimisation."""
from __future__ import annotations

import numpy as np

from .base import MeasurementPlan, WeightedTarget, codes_to_masks

DEFAULT_EPSILON = 0.5
# tie-break preference Z < X < Y
_ORDER = (3, 1, 2)


def hit_matrix(bases: np.ndarray, target_x: np.ndarray, target_z: np.ndarray) -> np.ndarray:
    """``(len(bases), len(target))`` booleans: basis row measures the Pauli."""
    bx, bz = codes_to_masks(bases)
    tx = np.asarray(target_x, dtype=np.int64)[None, :]
    tz = np.asarray(target_z, dtype=np.int64)[None, :]
    supp = tx | tz
    return (((bx[:, None] ^ tx) & supp) == 0) & (((bz[:, None] ^ tz) & supp) == 0)


def hit_counts(bases: np.ndarray, target: WeightedTarget, chunk: int = 4096) -> np.ndarray:
    out = np.zeros(len(target), dtype=np.int64)
    for lo in range(0, len(bases), chunk):
        out += hit_matrix(bases[lo:lo + chunk], target.xs, target.zs).sum(axis=0)
    return out


def confidence_bound(bases: np.ndarray, target: WeightedTarget, epsilon: float = DEFAULT_EPSILON) -> float:
    """Realised bound ``sum_P wbar_P exp(-(eps^2/2) h_P)`` of a basis sequence."""
    h = hit_counts(np.asarray(bases), target)
    wbar = target.weights / target.weights.max()
    return float(np.sum(wbar * np.exp(-0.5 * epsilon ** 2 * h)))


def derandomize(target: WeightedTarget, shots: int, epsilon: float = DEFAULT_EPSILON) -> MeasurementPlan:
    """Choose bases shot by shot, qubit by qubit, minimising the expected bound.

    Undecided letters of the current shot count as uniform over X, Y, Z, and
    every later shot contributes the factor ``1 - 3^-|P| (1 - e^{-eps^2/2})``.
    Pure function of its inputs.
    """
    if len(target) == 0:
        raise ValueError("empty target")
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    n = target.n_qubits
    letters = target.letters.astype(np.int64)
    wbar = target.weights / target.weights.max()
    with np.errstate(divide="ignore"):
        logw = np.log(wbar)
    eta = 0.5 * epsilon ** 2
    nu = 1.0 - np.exp(-eta)
    size = (letters > 0).sum(axis=1)
    log_future = np.log1p(-nu * 3.0 ** (-size))
    on_qubit = [np.nonzero(letters[:, k] > 0)[0] for k in range(n)]
    hits = np.zeros(len(target), dtype=np.int64)
    bases = np.empty((shots, n), dtype=np.uint8)

    for m in range(shots):
        logW = logw - eta * hits + (shots - 1 - m) * log_future
        W = np.exp(logW - logW[np.isfinite(logW)].max())
        alive = np.ones(len(target), dtype=bool)
        undecided = size.copy()
        for k in range(n):
            idx = on_qubit[k]
            if len(idx) == 0:
                bases[m, k] = 3
                continue
            Wk, ak, uk, lk = W[idx], alive[idx], undecided[idx], letters[idx, k]
            best, best_cost = None, np.inf
            for code in _ORDER:
                match = ak & (lk == code)
                p_hit = np.where(match, 3.0 ** (-(uk - 1).astype(float)), 0.0)
                cost = float(np.sum(Wk * (1.0 - nu * p_hit)))
                if cost < best_cost:
                    best, best_cost = code, cost
            bases[m, k] = best
            alive[idx] &= lk == best
            undecided[idx] -= 1
        hits += alive
    return MeasurementPlan("dcs", bases, None)
