"""Generalised eigenproblem with eigen-filtering of the overlap matrix."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HERMITIAN_TOL = 1e-6
RESIDUAL_TOL = 1e-8


class GevpError(RuntimeError):
    pass


@dataclass(frozen=True)
class RegularizationConfig:
    epsilon: float = 1e-4
    n_lev: int = 20

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if self.n_lev < 1:
            raise ValueError("n_lev must be >= 1")


@dataclass(frozen=True)
class GevpResult:
    eigenvalues: np.ndarray
    coefficient_vectors: np.ndarray  # columns, in the original basis
    kept_dim: int
    dropped: int
    overlap_eigenvalues: np.ndarray

    def pair(self, rank: int = 0) -> tuple[float, np.ndarray]:
        if not 0 <= rank < self.kept_dim:
            raise GevpError(f"rank {rank} outside the retained spectrum of size {self.kept_dim}")
        return float(self.eigenvalues[rank]), self.coefficient_vectors[:, rank]


def _check_hermitian(m, name):
    scale = max(np.max(np.abs(m)), 1e-300)
    if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL * scale:
        raise GevpError(f"{name} is not Hermitian; hermitise before solving")


def regularized_solve(h_tilde, s_tilde, cfg: RegularizationConfig = RegularizationConfig()) -> GevpResult:
    """Solve ``H a = lambda S a`` in the dominant, well-conditioned part of ``S``.

    Eigenvectors of ``S`` with eigenvalue below ``cfg.epsilon`` are discarded
    and at most ``cfg.n_lev`` of the largest survivors are kept.  The reduced
    problem is made standard with ``S_reg^{-1/2}``.
    """
    h = np.asarray(h_tilde, dtype=complex)
    s = np.asarray(s_tilde, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1] or h.shape != s.shape:
        raise GevpError(f"matrix shapes {h.shape} and {s.shape} are not equal and square")
    _check_hermitian(h, "H")
    _check_hermitian(s, "S")
    d = h.shape[0]

    D, V = np.linalg.eigh(s)
    survivors = np.nonzero(D >= cfg.epsilon)[0]
    if len(survivors) == 0:
        raise GevpError(f"no overlap eigenvalue reaches epsilon={cfg.epsilon:g} (max {D.max():.3e})")
    # value descending, index ascending
    order = sorted(survivors.tolist(), key=lambda k: (-D[k], k))
    keep = sorted(order[: cfg.n_lev])
    v_reg = V[:, keep]

    h_reg = v_reg.conj().T @ h @ v_reg
    s_reg = v_reg.conj().T @ s @ v_reg
    sw, su = np.linalg.eigh(0.5 * (s_reg + s_reg.conj().T))
    if sw.min() <= 0:
        raise GevpError("reduced overlap matrix is not positive definite")
    s_inv_half = su @ np.diag(sw ** -0.5) @ su.conj().T
    a = s_inv_half @ h_reg @ s_inv_half
    w, y = np.linalg.eigh(0.5 * (a + a.conj().T))
    coeffs = v_reg @ (s_inv_half @ y)
    coeffs = np.stack([_phase_fix(coeffs[:, k]) for k in range(coeffs.shape[1])], axis=1)

    res = v_reg.conj().T @ (h @ coeffs - s @ coeffs * w[None, :])
    hnorm = max(np.linalg.norm(h, 2), 1e-300)
    cnorm = np.linalg.norm(coeffs, axis=0)
    if np.any(np.linalg.norm(res, axis=0) > RESIDUAL_TOL * hnorm * np.maximum(cnorm, 1.0)):
        raise GevpError("residual check failed for the reduced problem")

    return GevpResult(eigenvalues=w, coefficient_vectors=coeffs, kept_dim=len(keep),
                      dropped=d - len(keep), overlap_eigenvalues=D)


def _phase_fix(v):
    nz = np.nonzero(np.abs(v) > 1e-12 * max(np.abs(v).max(), 1e-300))[0]
    if len(nz):
        a = v[nz[0]]
        v = v * (abs(a) / a)
    return v
