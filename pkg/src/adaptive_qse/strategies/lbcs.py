"""Locally-biased classical shadows: optimise per-qubit basis probabilities."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .base import LocalBias, WeightedTarget

BETA_MIN = 1e-6


class ConvergenceWarning(RuntimeWarning):
    pass


def lbcs_cost(beta: np.ndarray | LocalBias, target: WeightedTarget) -> float:
    """``sum_P w_P^2 prod_{i in supp P} 1/beta_i(P_i)``."""
    b = beta.beta if isinstance(beta, LocalBias) else np.asarray(beta)
    return float(np.sum(target.weights ** 2 * _inv_products(b, target.letters)))


def _inv_products(beta, letters):
    n = beta.shape[0]
    logb = np.concatenate([np.zeros((n, 1)), np.log(beta)], axis=1)
    return np.exp(-logb[np.arange(n)[None, :], letters.astype(np.int64)].sum(axis=1))


def _simplex_min(a: np.ndarray, floor: float) -> np.ndarray:
    """argmin of ``sum_l a_l / b_l`` over ``{b >= floor, sum b = 1}``.

    KKT gives ``b_l = max(floor, sqrt(a_l) / nu)``; ``nu`` is found by
    water-filling over the sorted square roots.
    """
    r = np.sqrt(np.maximum(a, 0.0))
    if not np.any(r > 0):
        return np.full(3, 1.0 / 3.0)
    order = np.argsort(-r)
    for k in range(3, 0, -1):
        top = order[:k]
        free_mass = 1.0 - floor * (3 - k)
        b = np.full(3, floor)
        b[top] = r[top] * free_mass / r[top].sum()
        if np.all(b[top] >= floor):
            return b
    b = np.full(3, floor)
    b[order[0]] = 1.0 - 2 * floor
    return b


@dataclass(frozen=True)
class LbcsResult:
    bias: LocalBias
    cost: float
    iterations: int
    converged: bool
    history: tuple[float, ...]


def lbcs_optimize(target: WeightedTarget, beta_min: float = BETA_MIN, max_iter: int = 10_000,
                  tol: float = 1e-8, full_output: bool = False):
    """Minimise the LBCS cost over products of per-qubit simplices.

    Block-coordinate descent: each qubit's row has a closed-form minimiser
    with the others held fixed, so the cost never increases.  Stops when a
    full sweep lowers the cost by less than ``tol`` relative.
    """
    if len(target) == 0:
        raise ValueError("empty target")
    n = target.n_qubits
    letters = target.letters.astype(np.int64)
    w2 = target.weights ** 2
    beta = np.full((n, 3), 1.0 / 3.0)
    cost = float(np.sum(w2 * _inv_products(beta, letters)))
    history = [cost]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        for i in range(n):
            terms = w2 * _inv_products(beta, letters)
            li = letters[:, i]
            a = np.zeros(4)
            # undo qubit i's own factor: terms * beta_i(l) is independent of row i
            own = np.where(li > 0, beta[i, np.maximum(li - 1, 0)], 1.0)
            np.add.at(a, li, terms * own)
            beta[i] = _simplex_min(a[1:], beta_min)
        new = float(np.sum(w2 * _inv_products(beta, letters)))
        if new > cost * (1 + 1e-12):
            raise AssertionError(f"LBCS cost increased from {cost} to {new}")
        history.append(new)
        done = cost - new <= tol * new
        cost = new
        if done:
            converged = True
            break
    if not converged:
        warnings.warn(f"LBCS optimiser did not converge in {max_iter} sweeps", ConvergenceWarning)
    bias = LocalBias(beta / beta.sum(axis=1, keepdims=True))
    if full_output:
        return LbcsResult(bias, cost, it, converged, tuple(history))
    return bias
