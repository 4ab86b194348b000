"""Command-line entry point: ``adaptive-qse {run,compare,spectrum,scan}``."""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import experiments as ex
from .config import ExperimentConfig
from .io import fmt, load_hamiltonian_full, to_csv
from .statevector import SectorSpec, sector_spectrum

RUN_HEADER = ("trial", "iteration", "energy", "shots", "kept_dim", "converged")
COMPARE_HEADER = ("strategy", "total_shots", "mean_abs_error", "std")
SCAN_HEADER = ("label", "exact_excited", "qse_noiseless_gs_ref", "qse_noiseless_cisd_ref",
               "qse_adaptive_mean", "qse_adaptive_std")


def _config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.trials is not None:
        cfg = replace(cfg, trials=args.trials)
    return cfg


def _write(args, name: str, text: str) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text)
    return path


def trace_rows(traces) -> list[tuple]:
    return [(t, r.iteration, float(r.energy), r.shots, r.kept_dim, int(r.converged))
            for t, trace in enumerate(traces) for r in trace.records]


def cmd_run(args) -> int:
    cfg = _config(args)
    p = ex.build_problem(cfg)
    traces = ex.run_trials(p, cfg)
    path = _write(args, "trace.csv", to_csv(RUN_HEADER, trace_rows(traces)))
    final = float(np.mean([t.final_energy for t in traces]))
    ref = ex.noiseless_energy(p, cfg)
    print(f"final energy (mean of {len(traces)} trials): {fmt(final)}")
    print(f"noiseless subspace energy: {fmt(ref)}")
    print(f"error: {fmt(final - ref)}")
    print(f"trace written to {path}")
    return 0


def cmd_compare(args) -> int:
    cfg = _config(args)
    rows = ex.compare(cfg)
    text = to_csv(COMPARE_HEADER, [(r.strategy, r.total_shots, r.mean_abs_error, r.std) for r in rows])
    path = _write(args, "compare.csv", text)
    sys.stdout.write(text)
    print(f"written to {path}", file=sys.stderr)
    return 0


def cmd_spectrum(args) -> int:
    if args.config:
        cfg = ExperimentConfig.load(args.config)
        hpath, hformat = cfg.hamiltonian, cfg.hamiltonian_format
    elif args.hamiltonian:
        hpath, hformat = args.hamiltonian, "auto"
    else:
        raise ValueError("spectrum needs --hamiltonian or --config")
    loaded = load_hamiltonian_full(hpath, hformat)
    sector = args.sector if args.sector is not None else loaded.n_electrons
    if sector is None:
        raise ValueError("no electron count in the file; pass --sector")
    evals, _ = sector_spectrum(loaded.hamiltonian, SectorSpec(sector), args.count)
    print(f"# {sector}-electron sector, lowest {len(evals)} eigenvalues")
    for k, e in enumerate(evals):
        print(f"{k} {fmt(e)}")
    return 0


def cmd_scan(args) -> int:
    cfg = _config(args)
    rows = ex.scan(cfg)
    text = to_csv(SCAN_HEADER, [(r.label, r.exact_excited, r.qse_noiseless_gs_ref, r.qse_noiseless_cisd_ref,
                                 r.qse_adaptive_mean, r.qse_adaptive_std) for r in rows])
    path = _write(args, "scan.csv", text)
    sys.stdout.write(text)
    print(f"written to {path}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adaptive-qse", description="Adaptive measurement strategies for subspace expansion.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, needs_config in (("run", cmd_run, True), ("compare", cmd_compare, True),
                                   ("scan", cmd_scan, True), ("spectrum", cmd_spectrum, False)):
        p = sub.add_parser(name)
        p.add_argument("--config", required=needs_config, help="experiment JSON")
        p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--trials", type=int, default=None, help="overrides the config trial count")
        if name == "spectrum":
            p.add_argument("--hamiltonian")
            p.add_argument("--sector", type=int, default=None)
            p.add_argument("--count", type=int, default=6)
        p.set_defaults(func=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as err:  # every pipeline failure becomes a nonzero exit
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
