"""Adaptive measurement loop for quantum subspace expansion.

Classical preprocessing on a simulable reference fixes a first coefficient
vector; each iteration turns the current coefficients into dressed operators,
optimises measurement plans against them, samples the quantum state, and
re-solves the regularised subspace problem.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .gevp import GevpError, RegularizationConfig, regularized_solve
from .pauli import PauliSum
from .shots import _streams, execute_plan_counts
from .statevector import Statevector, basis_probabilities
from .strategies.base import MeasurementPlan, WeightedTarget, letter_codes, plan_from_bias, uniform_bias
from .strategies.derandomized import DEFAULT_EPSILON, derandomize
from .strategies.estimate import Source, estimate_many
from .strategies.lbcs import lbcs_optimize
from .strategies.ogm import DEFAULT_T, ogm_build, plan_from_ogm
from .subspace import (ExcitationSet, MatrixElementExpansion, exact_matrices, expand_elements, manifold_dressed,
                       rayleigh_quotient)

CHEMICAL_ACCURACY = 1.6e-3
DEGENERACY_TOL = 1e-6
STRATEGIES = ("cs", "lbcs", "dcs", "ogm")
ESTIMATORS = ("gevp", "dressed")
_ALIASES = {"uniform_cs": "cs"}


class DegenerateReferenceError(ValueError):
    """The classical reference cannot produce a non-trivial measurement strategy."""


class MeasurementError(RuntimeError):
    pass


class AdaptiveRunError(RuntimeError):
    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


def hermitize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


# preprocessing ----------------------------------------------------------------

@dataclass(frozen=True)
class Preprocessed:
    """Outcome of the classical step.

    ``manifold`` holds the coefficient vectors of every eigenpair degenerate
    with the target (within the tolerance), as columns; they occupy spectrum
    positions ``lo .. lo + K - 1``.  Unpacks as ``(alpha, exp)``.
    """

    alpha: np.ndarray
    exp: MatrixElementExpansion
    energy: float
    manifold: np.ndarray
    lo: int

    @property
    def width(self) -> int:
        return self.manifold.shape[1]

    def __iter__(self):
        yield self.alpha
        yield self.exp


def degenerate_block(eigenvalues, rank: int, tol: float | None) -> tuple[int, int]:
    """``(lo, K)``: contiguous run of eigenvalues within ``tol`` of ``eigenvalues[rank]``."""
    if not 0 <= rank < len(eigenvalues):
        raise GevpError(f"rank {rank} outside the retained spectrum of size {len(eigenvalues)}")
    if tol is None:
        return rank, 1
    lo = hi = rank
    while lo > 0 and abs(eigenvalues[lo - 1] - eigenvalues[rank]) <= tol:
        lo -= 1
    while hi + 1 < len(eigenvalues) and abs(eigenvalues[hi + 1] - eigenvalues[rank]) <= tol:
        hi += 1
    return lo, hi - lo + 1


def classical_preprocess(h: PauliSum, ops: ExcitationSet, reference: Statevector,
                         cfg: RegularizationConfig = RegularizationConfig(), rank: int = 0,
                         exp: MatrixElementExpansion | None = None, allow_product_reference: bool = False,
                         degeneracy_tol: float | None = DEGENERACY_TOL) -> Preprocessed:
    """Exact subspace problem on the classical reference.

    A single-determinant reference is rejected: excitations then drop out of
    the dressed operators.
    """
    if abs(np.linalg.norm(reference.amplitudes) - 1) > 1e-10:
        raise ValueError("reference state is not normalised")
    if not allow_product_reference and np.max(np.abs(reference.amplitudes)) > 1 - 1e-12:
        raise DegenerateReferenceError(
            "reference is a single computational basis state; excitation expectations vanish "
            "and no non-trivial strategy can be built (use e.g. a CISD reference)")
    exp = expand_elements(h, ops) if exp is None else exp
    h_t, s_t = exact_matrices(reference, exp)
    try:
        res = regularized_solve(hermitize(h_t), hermitize(s_t), cfg)
    except GevpError as err:
        raise DegenerateReferenceError(f"subspace collapses on the reference: {err}") from err
    energy, alpha = res.pair(rank)
    lo, k = degenerate_block(res.eigenvalues, rank, degeneracy_tol)
    return Preprocessed(alpha, exp, energy, res.coefficient_vectors[:, lo:lo + k], lo)


# budgets and strategies -----------------------------------------------------

@dataclass(frozen=True)
class BudgetPolicy:
    total_shots: int
    split_rule: str = "proportional_l1"
    fraction: float = 0.5

    def __post_init__(self):
        if self.total_shots < 1:
            raise ValueError("total_shots must be >= 1")
        if self.split_rule not in ("proportional_l1", "fixed_fraction"):
            raise ValueError(f"unknown split rule {self.split_rule!r}")
        if self.split_rule == "fixed_fraction" and not 0 < self.fraction < 1:
            raise ValueError("fraction must lie in (0, 1)")

    def split(self, norm_h: float, norm_s: float) -> tuple[int, int]:
        """Shots for (H_d, S_d); H_d receives the rounding remainder."""
        n = self.total_shots
        if n < 2:
            raise ValueError("need at least 2 shots to measure both dressed operators")
        if self.split_rule == "fixed_fraction":
            n_s = round(n * (1 - self.fraction))
        else:
            n_s = round(n * norm_s / (norm_h + norm_s))
        n_s = min(max(n_s, 1), n - 1)
        return n - n_s, n_s


def _normalize_kind(kind: str) -> str:
    kind = _ALIASES.get(kind, kind)
    if kind not in STRATEGIES:
        raise ValueError(f"unknown strategy {kind!r}; expected one of {STRATEGIES}")
    return kind


@dataclass
class PreparedStrategy:
    """Optimised generators for the two dressed-operator targets.

    The expensive optimisation happens once; :meth:`plans` draws fresh
    randomised plans (or returns the deterministic DCS plans).
    """

    kind: str
    targets: tuple[WeightedTarget, WeightedTarget]
    shots: tuple[int, int]
    generators: tuple

    def plans(self, rng: np.random.Generator) -> tuple[MeasurementPlan, MeasurementPlan]:
        out = []
        for gen, n in zip(self.generators, self.shots):
            if self.kind == "cs":
                out.append(plan_from_bias(gen, n, rng, kind="uniform_cs"))
            elif self.kind == "lbcs":
                out.append(plan_from_bias(gen, n, rng, kind="lbcs"))
            elif self.kind == "ogm":
                out.append(plan_from_ogm(gen, n, rng))
            else:
                out.append(gen)
        return out[0], out[1]


def prepare_strategy(alpha, exp: MatrixElementExpansion, kind: str, budget: BudgetPolicy,
                     dcs_epsilon: float = DEFAULT_EPSILON, ogm_T: float = DEFAULT_T) -> PreparedStrategy:
    """Targets from one coefficient vector, or from the columns of a degenerate manifold."""
    kind = _normalize_kind(kind)
    h_d, s_d = manifold_dressed(alpha, exp)
    targets = (WeightedTarget.from_pauli_sum(h_d), WeightedTarget.from_pauli_sum(s_d))
    for name, t in zip(("H_d", "S_d"), targets):
        if len(t) == 0:
            raise ValueError(f"dressed operator {name} has no non-identity terms")
    shots = budget.split(h_d.one_norm(), s_d.one_norm())
    gens = []
    for t, n in zip(targets, shots):
        if kind == "cs":
            gens.append(uniform_bias(exp.n_qubits))
        elif kind == "lbcs":
            gens.append(lbcs_optimize(t))
        elif kind == "dcs":
            gens.append(derandomize(t, n, dcs_epsilon))
        else:
            gens.append(ogm_build(t, ogm_T))
    return PreparedStrategy(kind, targets, shots, tuple(gens))


def build_strategies(alpha, exp: MatrixElementExpansion, kind: str, budget: BudgetPolicy,
                     rng: np.random.Generator, dcs_epsilon: float = DEFAULT_EPSILON,
                     ogm_T: float = DEFAULT_T) -> tuple[MeasurementPlan, MeasurementPlan]:
    return prepare_strategy(alpha, exp, kind, budget, dcs_epsilon, ogm_T).plans(rng)


# measurement and solve -------------------------------------------------------

@dataclass(frozen=True)
class SolveResult:
    energy: float
    alpha: np.ndarray
    kept_dim: int
    shots: int
    hits: np.ndarray = field(repr=False)  # aligned with exp.union_keys
    h_tilde: np.ndarray = field(repr=False)
    s_tilde: np.ndarray = field(repr=False)
    manifold: np.ndarray | None = field(default=None, repr=False)

    @property
    def zero_hit(self) -> int:
        return int(np.sum(self.hits == 0))

    def dressed_energy(self, alpha) -> float:
        """``<H_d>/<S_d>`` at a fixed coefficient vector, from the estimated matrices."""
        return rayleigh_quotient(alpha, hermitize(self.h_tilde), hermitize(self.s_tilde))

    def energy_for(self, estimator: str, alpha=None) -> float:
        if estimator == "gevp":
            return self.energy
        if estimator == "dressed":
            if alpha is None:
                raise ValueError("the dressed estimator needs the planning coefficients")
            return self.dressed_energy(alpha)
        raise ValueError(f"unknown estimator {estimator!r}; expected one of {ESTIMATORS}")


def _solve(h_t, s_t, cfg, rank, width=1):
    """Energy is the mean over spectrum positions ``rank .. rank + width - 1``."""
    if cfg is None:
        return math.nan, None, 0, None
    res = regularized_solve(hermitize(h_t), hermitize(s_t), cfg)
    if rank + width > res.kept_dim:
        raise GevpError(f"target block {rank}..{rank + width - 1} exceeds retained dimension {res.kept_dim}")
    block = res.coefficient_vectors[:, rank:rank + width]
    return float(np.mean(res.eigenvalues[rank:rank + width])), block[:, 0], res.kept_dim, block


def estimate_union(exp: MatrixElementExpansion, src_h: Source, src_s: Source) -> tuple[np.ndarray, np.ndarray]:
    """Estimates for every union Pauli; Paulis present in both H and S elements pool both plans."""
    keys = exp.union_keys
    in_h = np.isin(keys, exp.h_paulis)
    in_s = np.isin(keys, exp.s_paulis)
    mask = (1 << exp.n_qubits) - 1
    values = np.zeros(len(keys))
    hits = np.zeros(len(keys), dtype=np.int64)
    for sel, sources in ((in_h & ~in_s, [src_h]), (in_s & ~in_h, [src_s]), (in_h & in_s, [src_h, src_s])):
        if np.any(sel):
            k = keys[sel]
            values[sel], hits[sel] = estimate_many(sources, k >> exp.n_qubits, k & mask)
    return values, hits


def measure_and_solve(state: Statevector, exp: MatrixElementExpansion,
                      plans: tuple[MeasurementPlan, MeasurementPlan], cfg: RegularizationConfig | None,
                      rng: np.random.Generator, rank: int = 0, width: int = 1) -> SolveResult:
    """Sample both plans, estimate every union Pauli, assemble and solve.

    ``cfg=None`` skips the eigen-solve (energy NaN), leaving the estimated
    matrices for :meth:`SolveResult.dressed_energy`.
    """
    plan_h, plan_s = plans
    src_h = Source(execute_plan_counts(state, plan_h, rng), plan_h)
    src_s = Source(execute_plan_counts(state, plan_s, rng), plan_s)
    values, hits = estimate_union(exp, src_h, src_s)
    if len(hits) and not np.any(hits):
        raise MeasurementError("no measured Pauli was hit by any shot")
    h_t, s_t = exp.assemble(values)
    energy, alpha, kept, block = _solve(h_t, s_t, cfg, rank, width)
    return SolveResult(energy, alpha, kept, plan_h.shots + plan_s.shots, hits, h_t, s_t, block)


def solve_exact(state: Statevector, exp: MatrixElementExpansion, cfg: RegularizationConfig,
                rank: int = 0, width: int = 1) -> SolveResult:
    """Infinite-shot limit: exact expectations in place of estimates."""
    h_t, s_t = exact_matrices(state, exp)
    energy, alpha, kept, block = _solve(h_t, s_t, cfg, rank, width)
    return SolveResult(energy, alpha, kept, 0, np.full(len(exp.union_keys), -1), h_t, s_t, block)


# naive equal allocation --------------------------------------------------------

@dataclass(frozen=True)
class NaiveBatch:
    matrix: str  # "H" or "S"
    i: int
    j: int
    x: int
    z: int
    basis: np.ndarray
    shots: int


@dataclass(frozen=True)
class NaiveAllocation:
    batches: tuple[NaiveBatch, ...]
    n_elements: int
    total_shots: int

    @property
    def used_shots(self) -> int:
        return sum(b.shots for b in self.batches)


def naive_equal_plan(exp: MatrixElementExpansion, total_shots: int) -> NaiveAllocation:
    """Equal shots per matrix element, then equally per Pauli within the element.

    Upper-triangle elements of H~ and S~ with at least one non-identity Pauli
    count as elements; each Pauli gets a dedicated batch in its own basis
    (support letters, Z elsewhere).
    """
    elements = []
    for name, mats in (("H", exp.h_elements), ("S", exp.s_elements)):
        for i in range(exp.dim):
            for j in range(i, exp.dim):
                el = mats[i][j].without_identity()
                if len(el):
                    elements.append((name, i, j, el))
    if not elements:
        raise ValueError("no element needs measuring")
    per_element = total_shots // len(elements)
    out = []
    for name, i, j, el in elements:
        share = per_element // len(el)
        codes = letter_codes(el.xs, el.zs, exp.n_qubits)
        codes[codes == 0] = 3
        for x, z, b in zip(el.xs, el.zs, codes):
            out.append(NaiveBatch(name, i, j, int(x), int(z), b, share))
    return NaiveAllocation(tuple(out), len(elements), total_shots)


def measure_naive(state: Statevector, exp: MatrixElementExpansion, alloc: NaiveAllocation,
                  cfg: RegularizationConfig | None, rng: np.random.Generator, rank: int = 0,
                  width: int = 1) -> SolveResult:
    """Per-batch hit means assembled element by element; unmeasured Paulis count as 0."""
    n = exp.n_qubits
    streams = _streams(rng, len(alloc.batches))
    idx = np.arange(1 << n, dtype=np.int64)
    probs: dict[bytes, np.ndarray] = {}
    est: dict[tuple, dict[tuple[int, int], float]] = {}
    zero = 0
    for k, b in enumerate(alloc.batches):
        key = b.basis.tobytes()
        if key not in probs:
            probs[key] = basis_probabilities(state, b.basis)
        if b.shots == 0:
            val = 0.0
            zero += 1
        else:
            counts = streams[k].multinomial(b.shots, probs[key])
            sign = 1 - 2 * (np.bitwise_count(idx & (b.x | b.z)).astype(np.int64) & 1)
            val = float(counts @ sign) / b.shots
        est.setdefault((b.matrix, b.i, b.j), {})[(b.x, b.z)] = val

    d = exp.dim
    mats = {"H": np.zeros((d, d), complex), "S": np.zeros((d, d), complex)}
    for name, elements in (("H", exp.h_elements), ("S", exp.s_elements)):
        for i in range(d):
            for j in range(i, d):
                el = elements[i][j]
                vals = est.get((name, i, j), {})
                total = 0j
                for x, z, c in zip(el.xs, el.zs, el.coeffs):
                    total += c if (x == 0 and z == 0) else c * vals.get((int(x), int(z)), 0.0)
                mats[name][i, j] = total
                mats[name][j, i] = np.conj(total)
    energy, alpha, kept, block = _solve(mats["H"], mats["S"], cfg, rank, width)
    hits = np.array([b.shots for b in alloc.batches])
    return SolveResult(energy, alpha, kept, alloc.used_shots, hits, mats["H"], mats["S"], block)


# adaptive loop ---------------------------------------------------------------

@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    energy: float
    alpha: np.ndarray
    shots: int
    kept_dim: int
    zero_hit: int
    min_hits: int
    converged: bool


@dataclass
class IterationTrace:
    preprocess_energy: float
    alpha_c: np.ndarray
    records: list[IterationRecord] = field(default_factory=list)
    stop_reason: str | None = None

    @property
    def converged(self) -> bool:
        return self.stop_reason in ("converged", "single_iteration")

    @property
    def converged_at(self) -> int | None:
        for r in self.records:
            if r.converged:
                return r.iteration
        return None

    @property
    def energies(self) -> np.ndarray:
        return np.array([r.energy for r in self.records])

    @property
    def final_energy(self) -> float:
        return self.records[-1].energy


def run_adaptive(h: PauliSum, ops: ExcitationSet, quantum_state: Statevector,
                 classical_reference: Statevector, strategy_kind: str, budget: BudgetPolicy,
                 cfg: RegularizationConfig, max_iter: int, conv_tol: float,
                 rng: np.random.Generator, rank: int = 0, oracle: bool = False,
                 dcs_epsilon: float = DEFAULT_EPSILON, ogm_T: float = DEFAULT_T,
                 exp: MatrixElementExpansion | None = None,
                 degeneracy_tol: float | None = DEGENERACY_TOL) -> IterationTrace:
    """Iterate measure -> solve -> re-plan until successive energies agree.

    Convergence is ``|E(m) - E(m-1)| < conv_tol``, first testable at m = 2.
    An infinite ``conv_tol`` runs exactly one iteration.  With ``oracle``
    exact expectations replace shot estimates.

    When the classical target level is degenerate (K eigenpairs within
    ``degeneracy_tol``), plans cover the whole K-dimensional manifold and
    E(m) is the mean of the K eigenvalues at the same spectrum positions;
    ``degeneracy_tol=None`` always tracks a single eigenpair.
    """
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    pre = classical_preprocess(h, ops, classical_reference, cfg, rank, exp=exp, degeneracy_tol=degeneracy_tol)
    exp = pre.exp
    trace = IterationTrace(preprocess_energy=pre.energy, alpha_c=pre.alpha)
    vectors = pre.manifold
    prev = None
    for m in range(1, max_iter + 1):
        try:
            prepared = prepare_strategy(vectors, exp, strategy_kind, budget, dcs_epsilon, ogm_T)
            if oracle:
                res = solve_exact(quantum_state, exp, cfg, pre.lo, pre.width)
                res = replace(res, shots=budget.total_shots)
            else:
                res = measure_and_solve(quantum_state, exp, prepared.plans(rng), cfg, rng, pre.lo, pre.width)
        except (GevpError, MeasurementError, ValueError) as err:
            trace.stop_reason = "failed"
            raise AdaptiveRunError(f"iteration {m} failed: {err}", trace) from err
        if not math.isfinite(res.energy):
            trace.stop_reason = "failed"
            raise AdaptiveRunError(f"iteration {m} produced a non-finite energy", trace)
        conv = prev is not None and abs(res.energy - prev) < conv_tol
        trace.records.append(IterationRecord(m, res.energy, res.alpha, res.shots, res.kept_dim,
                                             res.zero_hit, int(res.hits.min()) if len(res.hits) else 0, conv))
        if conv:
            trace.stop_reason = "converged"
            break
        if math.isinf(conv_tol):
            trace.stop_reason = "single_iteration"
            break
        prev = res.energy
        vectors = res.manifold
    else:
        trace.stop_reason = "max_iter"
    return trace
