"""Experiment drivers behind the command-line verbs."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig, StateSpec
from .driver import (IterationTrace, classical_preprocess, measure_and_solve, measure_naive, naive_equal_plan,
                     prepare_strategy, run_adaptive, solve_exact)
from .io import load_hamiltonian_full, load_statevector
from .pauli import LadderOperatorProduct, PauliSum
from .statevector import SectorSpec, Statevector, cisd_state, exact_eigenstate, sector_spectrum
from .subspace import ExcitationSet, MatrixElementExpansion, expand_elements, singles_annihilation, two_plus_one


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng([seed, trial])


@dataclass
class Problem:
    """Everything fixed by the config before any shot is taken."""

    label: str
    hamiltonian: PauliSum
    n_electrons: int
    hf_occupation: str | None
    ops: ExcitationSet
    exp: MatrixElementExpansion
    quantum_state: Statevector
    reference: Statevector
    target_sector: int
    exact_energy: float
    rank: int


def build_ops(excitations, n: int) -> ExcitationSet:
    if excitations == "singles_annihilation":
        return singles_annihilation(n)
    if excitations == "two_plus_one":
        return two_plus_one(n)
    return ExcitationSet(tuple(LadderOperatorProduct.parse(p) for p in excitations), n)


def make_state(spec: StateSpec, h: PauliSum, n_electrons: int | None, hf: str | None) -> Statevector:
    if spec.kind == "file":
        return load_statevector(spec.path)
    if spec.kind == "cisd":
        occ = spec.hf_occupation or hf
        if occ is None:
            raise ConfigError("CISD state needs an hf_occupation (config or fixture metadata)")
        return cisd_state(h, occ)
    ne = spec.sector if spec.sector is not None else n_electrons
    if ne is None:
        raise ConfigError("exact_gs state needs a sector (config or fixture metadata)")
    return exact_eigenstate(h, SectorSpec(ne), spec.rank)[1]


def build_problem(cfg: ExperimentConfig, path: str | None = None) -> Problem:
    path = path or cfg.hamiltonian
    loaded = load_hamiltonian_full(path, cfg.hamiltonian_format)
    h = loaded.hamiltonian
    ne = loaded.n_electrons
    if ne is None and cfg.quantum_state.sector is not None:
        ne = cfg.quantum_state.sector
    ops = build_ops(cfg.excitations, h.n_qubits)
    psi = make_state(cfg.quantum_state, h, ne, loaded.hf_occupation)
    ref = psi if cfg.reference == cfg.quantum_state else make_state(cfg.reference, h, ne, loaded.hf_occupation)
    if ne is None:
        raise ConfigError("cannot determine the electron count of the quantum state")
    sector = ne + ops.particle_change
    if not 0 <= sector <= h.n_qubits:
        raise ConfigError(f"excitations map the {ne}-electron state outside the Fock space")
    evals, _ = sector_spectrum(h, SectorSpec(sector), cfg.target_rank + 1)
    label = cfg.label if path == cfg.hamiltonian and cfg.label else loaded.metadata.get("label", Path(path).stem)
    return Problem(label, h, ne, loaded.hf_occupation, ops, expand_elements(h, ops), psi, ref,
                   sector, float(evals[cfg.target_rank]), cfg.target_rank)


# parallel map ------------------------------------------------------------------

_CONTEXT: dict = {}


def _init(ctx):
    _CONTEXT.clear()
    _CONTEXT.update(ctx)


def _call(args):
    fn, item = args
    return fn(_CONTEXT, item)


def pmap(fn, items, ctx: dict, workers: int = 1) -> list:
    """Order-preserving map; ``fn(ctx, item)`` must be a module-level function."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(ctx, it) for it in items]
    with ProcessPoolExecutor(max_workers=workers, initializer=_init, initargs=(ctx,)) as pool:
        return list(pool.map(_call, [(fn, it) for it in items]))


# compare -----------------------------------------------------------------------

@dataclass(frozen=True)
class CompareRow:
    strategy: str
    total_shots: int
    energies: tuple[float, ...]
    exact: float

    @property
    def mean_abs_error(self) -> float:
        return float(np.mean(np.abs(np.array(self.energies) - self.exact)))

    @property
    def std(self) -> float:
        return float(np.std(self.energies, ddof=1)) if len(self.energies) > 1 else 0.0


def _compare_trial(ctx, trial):
    p: Problem = ctx["problem"]
    rng = trial_rng(ctx["seed"], trial)
    reg = ctx["reg"] if ctx["estimator"] == "gevp" else None
    lo, width = ctx["block"]
    if ctx["strategy"] == "naive_equal":
        res = measure_naive(p.quantum_state, p.exp, ctx["alloc"], reg, rng, lo, width)
    else:
        res = measure_and_solve(p.quantum_state, p.exp, ctx["prepared"].plans(rng), reg, rng, lo, width)
    return res.energy_for(ctx["estimator"], ctx["alpha"])


def compare_cell(p: Problem, cfg: ExperimentConfig, strategy: str, shots: int,
                 trials: int | None = None) -> CompareRow:
    """Independent single-iteration estimates from the configured quantum state."""
    reg = cfg.regularization(shots)
    pre = classical_preprocess(p.hamiltonian, p.ops, p.reference, reg, p.rank, exp=p.exp)
    ctx = {"problem": p, "seed": cfg.seed, "reg": reg, "estimator": cfg.estimator,
           "strategy": strategy, "alpha": pre.alpha, "block": (pre.lo, pre.width)}
    if strategy == "naive_equal":
        ctx["alloc"] = naive_equal_plan(p.exp, shots)
    else:
        # the dressed estimate reads only alpha's own operators; a re-solve needs the whole manifold
        vectors = pre.alpha if cfg.estimator == "dressed" else pre.manifold
        ctx["prepared"] = prepare_strategy(vectors, p.exp, strategy, cfg.budget(shots), cfg.dcs_epsilon, cfg.ogm_T)
    n = cfg.trials if trials is None else trials
    energies = pmap(_compare_trial, range(n), ctx, cfg.workers)
    return CompareRow(strategy, shots, tuple(energies), p.exact_energy)


def compare(cfg: ExperimentConfig, trials: int | None = None) -> list[CompareRow]:
    p = build_problem(cfg)
    return [compare_cell(p, cfg, s, n, trials) for s in cfg.compare_strategies for n in cfg.compare_shots]


# adaptive runs -------------------------------------------------------------------

def _adaptive_trial(ctx, trial):
    p: Problem = ctx["problem"]
    cfg: ExperimentConfig = ctx["cfg"]
    return run_adaptive(p.hamiltonian, p.ops, p.quantum_state, p.reference, cfg.strategy, cfg.budget(),
                        cfg.regularization(), cfg.iterations, cfg.conv_tol, trial_rng(cfg.seed, trial),
                        p.rank, dcs_epsilon=cfg.dcs_epsilon, ogm_T=cfg.ogm_T, exp=p.exp)


def run_trials(p: Problem, cfg: ExperimentConfig, trials: int | None = None) -> list[IterationTrace]:
    if cfg.strategy == "naive_equal":
        raise ConfigError("naive_equal has no coefficient-driven plans; use it with 'compare'")
    n = cfg.trials if trials is None else trials
    return pmap(_adaptive_trial, range(n), {"problem": p, "cfg": cfg}, cfg.workers)


def noiseless_energy(p: Problem, cfg: ExperimentConfig, state: Statevector | None = None) -> float:
    return solve_exact(p.quantum_state if state is None else state, p.exp, cfg.regularization(), p.rank).energy


@dataclass(frozen=True)
class ScanRow:
    label: str
    exact_excited: float
    qse_noiseless_gs_ref: float
    qse_noiseless_cisd_ref: float
    qse_adaptive_mean: float
    qse_adaptive_std: float


def scan(cfg: ExperimentConfig, trials: int | None = None) -> list[ScanRow]:
    rows = []
    for path in cfg.hamiltonians or (cfg.hamiltonian,):
        p = build_problem(cfg, path)
        gs = exact_eigenstate(p.hamiltonian, SectorSpec(p.n_electrons))[1]
        if p.hf_occupation is None:
            raise ConfigError(f"{path}: scan needs hf_occupation metadata for the CISD column")
        cisd = cisd_state(p.hamiltonian, p.hf_occupation)
        finals = [t.final_energy for t in run_trials(p, cfg, trials)]
        std = float(np.std(finals, ddof=1)) if len(finals) > 1 else 0.0
        rows.append(ScanRow(p.label, p.exact_energy, noiseless_energy(p, cfg, gs), noiseless_energy(p, cfg, cisd),
                            float(np.mean(finals)), std))
    return rows
