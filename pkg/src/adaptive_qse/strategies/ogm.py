"""Overlapped grouping measurement: shared bases plus an optimised distribution."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .base import MeasurementPlan, WeightedTarget, codes_to_text
from .derandomized import hit_matrix
from .lbcs import ConvergenceWarning

DEFAULT_T = 1e3


@dataclass(frozen=True)
class OGMPlan:
    n_qubits: int
    groups: np.ndarray  # (G, n) letter codes in {1, 2, 3}
    K: np.ndarray
    coverage: np.ndarray  # (P, G) bool: target Pauli measurable in group
    target: WeightedTarget
    T: float = DEFAULT_T
    converged: bool = True

    @property
    def covered(self) -> dict:
        strings = list(self.target.entries)
        return {s: set(np.nonzero(self.coverage[p])[0].tolist()) for p, s in enumerate(strings)}

    @property
    def group_labels(self) -> list[str]:
        return [codes_to_text(g) for g in self.groups]

    def loss(self, K=None) -> float:
        return ogm_loss(self.K if K is None else K, self.coverage, self.target.weights, self.T)


def ogm_loss(K, coverage, weights, T: float = DEFAULT_T) -> float:
    """``sum_{covered} c^2 / sum_{mu covers P} K(mu) + T * sum_{uncovered} c^2``."""
    K = np.asarray(K, dtype=float)
    w2 = np.asarray(weights, dtype=float) ** 2
    covered = coverage.any(axis=1)
    with np.errstate(divide="ignore"):
        denom = coverage[covered] @ K
        main = np.sum(w2[covered] / denom)
    return float(main + T * w2[~covered].sum())


def group_paulis(target: WeightedTarget) -> np.ndarray:
    """Greedy overlapped grouping.

    Paulis are visited by weight, heaviest first.  Each joins every existing
    group whose partly-fixed basis is qubit-wise compatible with it, fixing
    its letters there; with no compatible group it opens a new one.  Free
    qubits are finally set to Z and duplicate groups merged.
    """
    letters = target.letters
    order = np.argsort(-target.weights, kind="stable")
    groups = np.zeros((0, target.n_qubits), dtype=np.uint8)
    for p in order:
        lp = letters[p]
        supp = lp > 0
        if len(groups):
            g = groups[:, supp]
            compat = np.all((g == 0) | (g == lp[supp]), axis=1)
        else:
            compat = np.zeros(0, dtype=bool)
        if compat.any():
            sub = groups[compat]
            sub[:, supp] = lp[supp]
            groups[compat] = sub
        else:
            groups = np.vstack([groups, lp[None, :]])
    groups[groups == 0] = 3
    _, first = np.unique(groups, axis=0, return_index=True)
    return groups[np.sort(first)]


def _project_simplex(v: np.ndarray) -> np.ndarray:
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, len(v) + 1)
    rho = np.nonzero(u - css / k > 0)[0][-1]
    return np.maximum(v - css[rho] / (rho + 1), 0.0)


def optimize_distribution(coverage: np.ndarray, weights: np.ndarray, max_iter: int = 10_000,
                          tol: float = 1e-8) -> tuple[np.ndarray, bool]:
    """Projected gradient with backtracking on the simplex, started at uniform."""
    G = coverage.shape[1]
    C = coverage[coverage.any(axis=1)].astype(float)
    w2 = np.asarray(weights, dtype=float)[coverage.any(axis=1)] ** 2
    K = np.full(G, 1.0 / G)

    def f(k):
        d = C @ k
        return np.inf if np.any(d <= 0) else float(np.sum(w2 / d))

    def grad(k):
        d = C @ k
        return -(C.T @ (w2 / d ** 2))

    loss = f(K)
    step = 1.0 / max(np.abs(grad(K)).max(), 1e-300)
    for _ in range(max_iter):
        g = grad(K)
        while True:
            trial = _project_simplex(K - step * g)
            diff = trial - K
            new = f(trial)
            if new <= loss + g @ diff + (diff @ diff) / (2 * step):
                break
            step *= 0.5
            if step < 1e-300:
                return K, False
        K = trial
        done = loss - new <= tol * new
        loss = new
        step *= 2.0
        if done and np.linalg.norm(diff) < 1e-6:
            return K, True
    warnings.warn("OGM distribution optimiser did not converge", ConvergenceWarning)
    return K, False


def ogm_build(target: WeightedTarget, T: float = DEFAULT_T, max_iter: int = 10_000) -> OGMPlan:
    if len(target) == 0:
        raise ValueError("empty target")
    groups = group_paulis(target)
    coverage = hit_matrix(groups, target.xs, target.zs).T
    K, ok = optimize_distribution(coverage, target.weights, max_iter=max_iter)
    return OGMPlan(target.n_qubits, groups, K, coverage, target, T, ok)


def plan_from_ogm(plan: OGMPlan, shots: int, rng: np.random.Generator) -> MeasurementPlan:
    if shots < 1:
        raise ValueError("shots must be >= 1")
    K = np.clip(plan.K, 0.0, None)
    counts = rng.multinomial(shots, K / K.sum())
    keep = counts > 0
    return MeasurementPlan("ogm", plan.groups[keep], plan, counts[keep])
