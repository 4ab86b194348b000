"""The ten acceptance criteria at their stated tolerances.

Each test records one PASS/FAIL line, printed in the terminal summary.
"""
import time

import numpy as np
import pytest

from adaptive_qse.config import ExperimentConfig
from adaptive_qse.driver import BudgetPolicy, classical_preprocess, run_adaptive, solve_exact
from adaptive_qse.experiments import build_problem, compare_cell, noiseless_energy, run_trials
from adaptive_qse.gevp import RegularizationConfig, regularized_solve
from adaptive_qse.io import load_hamiltonian_full
from adaptive_qse.shots import execute_plan_counts
from adaptive_qse.statevector import Statevector, cisd_state
from adaptive_qse.strategies import (BasisCounts, Source, WeightedTarget, confidence_bound, derandomize,
                                     estimate_many, lbcs_optimize, ogm_build, plan_from_bias, uniform_bias)
from adaptive_qse.subspace import build_dressed, exact_matrices, expand_elements, singles_annihilation
from conftest import ALL_FIXTURES, CONFIGS, H2, record_acceptance
from oracles import load_integrals_dense, pauli_dense, sector_eigh

pytestmark = pytest.mark.acceptance


def test_c01_noiseless_gevp_matches_dense_sector(h2, h2_ops):
    t0 = time.perf_counter()
    dense = load_integrals_dense(H2)
    exact = sector_eigh(dense, 4, 1)[0][0]
    gs = Statevector.from_amplitudes(sector_eigh(dense, 4, 2)[1][:, 0])
    res = solve_exact(gs, expand_elements(h2, h2_ops), RegularizationConfig(1e-4, 20))
    dt = time.perf_counter() - t0
    err = abs(res.energy - exact)
    ok = err <= 1e-8 and dt < 1.0
    record_acceptance(1, ok, f"|E_gevp - E_exact| = {err:.2e} (tol 1e-8), {dt:.2f} s (limit 1 s)")
    assert ok


def test_c02_lbcs_beats_naive_equal():
    t0 = time.perf_counter()
    cfg = ExperimentConfig.load(CONFIGS / "h2_sto3g_compare.json")
    p = build_problem(cfg)
    naive = compare_cell(p, cfg, "naive_equal", 1000, 10)
    lbcs = compare_cell(p, cfg, "lbcs", 1000, 10)
    dt = time.perf_counter() - t0
    ratio = naive.std / lbcs.std
    ok = ratio >= 2 and dt < 30
    record_acceptance(2, ok, f"std naive {naive.std:.4f} / std lbcs {lbcs.std:.4f} = {ratio:.2f} (need >= 2), "
                             f"{dt:.1f} s (limit 30 s)")
    assert ok


def test_c03_strategy_ordering_8_qubits():
    t0 = time.perf_counter()
    cfg = ExperimentConfig.load(CONFIGS / "h2_631g_compare.json")
    p = build_problem(cfg)
    std = {s: compare_cell(p, cfg, s, 100_000, 10).std for s in ("cs", "lbcs", "dcs", "ogm")}
    dt = time.perf_counter() - t0
    ok = all(std[s] <= std["cs"] for s in ("lbcs", "dcs", "ogm")) and dt < 300
    detail = ", ".join(f"{s} {v:.4f}" for s, v in std.items())
    record_acceptance(3, ok, f"std at 1e5 shots: {detail}; {dt:.0f} s (limit 300 s)")
    assert ok


def test_c04_dressed_term_counts_soft(h2, h2_exp, h2_gs):
    pre = classical_preprocess(h2, None, h2_gs, RegularizationConfig(), exp=h2_exp)
    hd, sd = build_dressed(pre.alpha, h2_exp)
    ok = abs(len(hd) - 14) <= 4 and abs(len(sd) - 2) <= 1
    record_acceptance(4, ok, f"H_d {len(hd)} terms (14 +- 4), S_d {len(sd)} terms (2 +- 1)")
    if not ok:
        pytest.xfail("soft check: term counts depend on the fixture")


def test_c05_inverse_weighted_estimator_unbiased():
    t0 = time.perf_counter()
    r = np.random.default_rng(5)
    psi = r.normal(size=16) + 1j * r.normal(size=16)
    state = Statevector.from_amplitudes(psi)
    labels = ["XIII", "IYII", "ZZII", "XYZI", "IXXZ", "YYYY", "ZIZX", "IIYZ"]
    exact = np.array([np.vdot(state.amplitudes, pauli_dense(l) @ state.amplitudes).real for l in labels])
    target = WeightedTarget.from_dict(dict(zip(labels, [1.0, 0.8, 0.6, 0.5, 0.5, 0.3, 0.4, 0.7])))
    worst = {}
    for name, bias, kind in (("cs", uniform_bias(4), "uniform_cs"), ("lbcs", lbcs_optimize(target), "lbcs")):
        ests = []
        for _ in range(200):
            plan = plan_from_bias(bias, 10_000, r, kind=kind)
            est, _ = estimate_many([Source(execute_plan_counts(state, plan, r), plan)], target.xs, target.zs)
            ests.append(est)
        ests = np.array(ests)
        se = ests.std(axis=0, ddof=1) / np.sqrt(len(ests))
        worst[name] = float(np.max(np.abs(ests.mean(axis=0) - exact) / se))
    dt = time.perf_counter() - t0
    ok = max(worst.values()) <= 5 and dt < 60
    record_acceptance(5, ok, f"max |mean - exact| / SE: cs {worst['cs']:.2f}, lbcs {worst['lbcs']:.2f} (<= 5), "
                             f"{dt:.1f} s (limit 60 s)")
    assert ok


def test_c06_derandomized_bound_beats_random(h2, h2_exp, h2_gs):
    pre = classical_preprocess(h2, None, h2_gs, RegularizationConfig(), exp=h2_exp)
    targets = [WeightedTarget.from_pauli_sum(op) for op in build_dressed(pre.alpha, h2_exp)]
    shots = BudgetPolicy(1000).split(*(op.one_norm() for op in build_dressed(pre.alpha, h2_exp)))
    failures = []
    for seed in range(10):
        r = np.random.default_rng(seed)
        for name, t, n in zip(("H_d", "S_d"), targets, shots):
            dcs = confidence_bound(derandomize(t, n).bases, t)
            rand = np.mean([confidence_bound(r.integers(1, 4, size=(n, 4)), t) for _ in range(10)])
            if dcs > rand:
                failures.append((seed, name, dcs, rand))
    ok = not failures
    record_acceptance(6, ok, f"DCS bound <= random-plan mean for {20 - len(failures)}/20 (seed, target) pairs")
    assert ok


def test_c07_ogm_loss_not_worse_than_uniform():
    rows = []
    for path in ALL_FIXTURES:
        loaded = load_hamiltonian_full(path)
        h = loaded.hamiltonian
        exp = expand_elements(h, singles_annihilation(h.n_qubits))
        ref = cisd_state(h, loaded.hf_occupation)
        pre = classical_preprocess(h, None, ref, RegularizationConfig(), exp=exp)
        for op in (h, *build_dressed(pre.alpha, exp)):
            plan = ogm_build(WeightedTarget.from_pauli_sum(op))
            uniform = np.full(len(plan.groups), 1.0 / len(plan.groups))
            penalty = float(np.sum(plan.target.weights[~plan.coverage.any(axis=1)] ** 2))
            rows.append((path.stem, plan.loss(), plan.loss(uniform), penalty))
    ok = all(lo <= lu * (1 + 1e-12) and pen == 0 for _, lo, lu, pen in rows)
    record_acceptance(7, ok, f"{sum(lo <= lu * (1 + 1e-12) for _, lo, lu, _ in rows)}/{len(rows)} targets with "
                             f"loss(K_opt) <= loss(uniform); max penalty {max(r[3] for r in rows):g}")
    assert ok


def test_c08_adaptive_convergence():
    t0 = time.perf_counter()
    cfg = ExperimentConfig.load(CONFIGS / "h2_sto3g_run.json")
    assert (cfg.strategy, cfg.shots, cfg.iterations, cfg.trials) == ("lbcs", 1_000_000, 5, 10)
    assert cfg.reference.kind == "cisd"
    p = build_problem(cfg)
    traces = run_trials(p, cfg)
    ref = noiseless_energy(p, cfg)
    dt = time.perf_counter() - t0
    err = float(np.mean([abs(t.final_energy - ref) for t in traces]))
    early = sum(t.converged_at is not None and t.converged_at <= 3 for t in traces)
    ok = err <= 5e-3 and early >= 8 and dt < 600
    record_acceptance(8, ok, f"mean |E_final - E_noiseless| = {err:.2e} (<= 5e-3), converged by iteration 3 in "
                             f"{early}/10 (>= 8), {dt:.0f} s (limit 600 s)")
    assert ok


def test_c09_regularization_behaviour(h2_exp, h2_gs, h2_8_exp, h2_8_gs):
    q, _ = np.linalg.qr(np.random.default_rng(9).normal(size=(3, 3)))
    s = q @ np.diag([1.5, 0.4, 1e-6]) @ q.T
    h = q @ np.diag([-1.0, 0.3, 40.0]) @ q.T
    res = regularized_solve(h, s, RegularizationConfig(1e-4, 20))
    pair_ok = res.kept_dim == 2 and bool(np.all(np.isfinite(res.eigenvalues)))
    mono_ok = True
    for exp, gs in ((h2_exp, h2_gs), (h2_8_exp, h2_8_gs)):
        ht, st = exact_matrices(gs, exp)
        lowest = [regularized_solve(ht, st, RegularizationConfig(1e-4, k)).eigenvalues[0]
                  for k in range(1, exp.dim + 1)]
        mono_ok &= all(b <= a + 1e-10 for a, b in zip(lowest, lowest[1:]))
    ok = pair_ok and mono_ok
    record_acceptance(9, ok, f"3x3 pair kept_dim {res.kept_dim} (want 2), finite {pair_ok}; "
                             f"n_lev monotone on fixtures {mono_ok}")
    assert ok


def test_c10_oracle_fixed_point(h2, h2_ops, h2_exp):
    ref = cisd_state(h2, "1100")
    trace = run_adaptive(h2, h2_ops, ref, ref, "lbcs", BudgetPolicy(1_000_000), RegularizationConfig(1e-4, 20), 5,
                         1.6e-3, np.random.default_rng(0), oracle=True, exp=h2_exp)
    ht, st = exact_matrices(ref, h2_exp)
    a1, a2 = trace.records[0].alpha, trace.records[1].alpha
    overlap = abs(np.vdot(a1, st @ a2)) / np.sqrt(np.vdot(a1, st @ a1).real * np.vdot(a2, st @ a2).real)
    ok = trace.converged_at == 2 and overlap > 1 - 1e-9
    record_acceptance(10, ok, f"converged at iteration {trace.converged_at} (want 2), alpha overlap "
                              f"1 - {1 - overlap:.1e}")
    assert ok
