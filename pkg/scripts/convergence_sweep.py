"""Seed sweep of an adaptive-run config: error and early-convergence counts per seed.

    python scripts/convergence_sweep.py configs/h2_sto3g_run.json --seeds 1 10
"""
import argparse
from dataclasses import replace

import numpy as np

from adaptive_qse.config import ExperimentConfig
from adaptive_qse.experiments import build_problem, noiseless_energy, run_trials


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("config")
    ap.add_argument("--seeds", type=int, nargs=2, default=(1, 10), metavar=("FIRST", "LAST"))
    ap.add_argument("--by", type=int, default=3, help="iteration by which convergence counts as early")
    args = ap.parse_args()
    base = ExperimentConfig.load(args.config)
    p = build_problem(base)
    ref = noiseless_energy(p, base)
    print("seed,mean_abs_error,early,trials")
    for seed in range(args.seeds[0], args.seeds[1] + 1):
        traces = run_trials(p, replace(base, seed=seed))
        err = np.mean([abs(t.final_energy - ref) for t in traces])
        early = sum(t.converged_at is not None and t.converged_at <= args.by for t in traces)
        print(f"{seed},{err:.3e},{early},{len(traces)}", flush=True)


if __name__ == "__main__":
    main()
