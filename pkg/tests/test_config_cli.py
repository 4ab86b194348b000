import json
import subprocess
import sys

import numpy as np
import pytest

from adaptive_qse.cli import COMPARE_HEADER, RUN_HEADER, SCAN_HEADER, main
from adaptive_qse.config import ConfigError, ExperimentConfig, StateSpec
from adaptive_qse.experiments import build_problem, compare, pmap, trial_rng
from adaptive_qse.io import read_csv
from conftest import CONFIGS, H2, H4_CHAIN

H2_E_ONE_ELECTRON = -0.5363700785542703


def write_cfg(tmp_path, **doc):
    base = {"hamiltonian": str(H2), "reference": "cisd", "quantum_state": "exact_gs", "shots": 2000,
            "iterations": 3, "trials": 2, "seed": 1}
    base.update(doc)
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(base))
    return p


# config -------------------------------------------------------------------------

@pytest.mark.parametrize("name", sorted(p.name for p in CONFIGS.glob("*.json")))
def test_shipped_configs_load(name):
    cfg = ExperimentConfig.load(CONFIGS / name)
    assert cfg.hamiltonian or cfg.hamiltonians


def test_defaults_and_overrides(tmp_path):
    cfg = ExperimentConfig.load(write_cfg(tmp_path, budget={"split_rule": "fixed_fraction", "fraction": 0.25}))
    assert cfg.reference == StateSpec("cisd") and cfg.quantum_state == StateSpec("exact_gs")
    assert cfg.budget().split(1.0, 1.0) == (500, 1500)
    assert cfg.regularization().epsilon == 1e-4
    assert cfg.compare_strategies == ("lbcs",) and cfg.compare_shots == (2000,)
    assert ExperimentConfig.load(write_cfg(tmp_path, epsilon=None)).regularization(100).epsilon == 1e-4


@pytest.mark.parametrize("doc, match", [
    ({"strategy": "magic"}, "unknown strategy"),
    ({"shots": 0}, "shots"),
    ({"shots": 1}, "at least 2"),
    ({"estimator": "median"}, "estimator"),
    ({"excitations": "doubles"}, "excitations"),
    ({"colour": "red"}, "unknown config keys"),
    ({"conv_tol": 0}, "conv_tol"),
    ({"quantum_state": {"kind": "mps"}}, "state kind"),
    ({"quantum_state": {"kind": "file"}}, "path"),
    ({"quantum_state": {"kind": "file", "path": "nope.json"}}, "does not exist"),
    ({"hamiltonian": "missing.json"}, "does not exist"),
    ({"budget": {"split_rule": "even"}}, "split rule"),
])
def test_config_validation(tmp_path, doc, match):
    with pytest.raises(ConfigError, match=match):
        ExperimentConfig.load(write_cfg(tmp_path, **doc))


def test_malformed_config(tmp_path):
    p = tmp_path / "c.json"
    p.write_text("{\n  \"shots\": ,\n}")
    with pytest.raises(ConfigError, match="line 2"):
        ExperimentConfig.load(p)
    p.write_text("[]")
    with pytest.raises(ConfigError, match="object"):
        ExperimentConfig.load(p)


def test_explicit_excitations(tmp_path):
    ops = [[[p, False]] for p in range(4)]
    cfg = ExperimentConfig.load(write_cfg(tmp_path, excitations=ops))
    p = build_problem(cfg)
    assert len(p.ops) == 4 and p.target_sector == 1
    assert p.exact_energy == pytest.approx(H2_E_ONE_ELECTRON, abs=1e-10)


def test_relative_paths_resolve_against_config_dir(tmp_path):
    sub = tmp_path / "deep"
    sub.mkdir()
    (sub / "h.json").write_text(H2.read_text())
    p = sub / "cfg.json"
    p.write_text(json.dumps({"hamiltonian": "h.json"}))
    assert ExperimentConfig.load(p).hamiltonian == str(sub / "h.json")


# experiments --------------------------------------------------------------------

def test_trial_rng_streams_are_independent_and_reproducible():
    assert trial_rng(3, 0).random() == trial_rng(3, 0).random()
    assert trial_rng(3, 0).random() != trial_rng(3, 1).random()


def _square(ctx, x):
    return ctx["k"] * x * x


def test_pmap_parallel_matches_serial():
    assert pmap(_square, range(5), {"k": 2}, workers=2) == pmap(_square, range(5), {"k": 2}) == [0, 2, 8, 18, 32]


def test_compare_rows(tmp_path):
    cfg = ExperimentConfig.load(write_cfg(tmp_path, strategies=["naive_equal", "dcs"], shots_list=[500, 1000]))
    rows = compare(cfg, trials=3)
    assert [(r.strategy, r.total_shots) for r in rows] == [("naive_equal", 500), ("naive_equal", 1000),
                                                          ("dcs", 500), ("dcs", 1000)]
    for r in rows:
        assert len(r.energies) == 3 and np.all(np.isfinite(r.energies))
        assert r.exact == pytest.approx(H2_E_ONE_ELECTRON, abs=1e-10)


def test_run_rejects_naive(tmp_path):
    assert main(["run", "--config", str(write_cfg(tmp_path, strategy="naive_equal")), "--out", str(tmp_path)]) == 1


# CLI ----------------------------------------------------------------------------

def test_cli_run_writes_trace(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    rows = read_csv((tmp_path / "o" / "trace.csv").read_text())
    assert tuple(rows[0]) == RUN_HEADER
    assert {r["trial"] for r in rows} == {"0", "1"}
    assert "noiseless subspace energy" in capsys.readouterr().out


def test_cli_seed_determinism(tmp_path):
    cfg = write_cfg(tmp_path)
    for out in ("a", "b"):
        assert main(["run", "--config", str(cfg), "--seed", "5", "--out", str(tmp_path / out)]) == 0
    assert (tmp_path / "a" / "trace.csv").read_bytes() == (tmp_path / "b" / "trace.csv").read_bytes()
    assert main(["run", "--config", str(cfg), "--seed", "6", "--out", str(tmp_path / "c")]) == 0
    assert (tmp_path / "a" / "trace.csv").read_bytes() != (tmp_path / "c" / "trace.csv").read_bytes()


def test_cli_compare(tmp_path, capsys):
    cfg = write_cfg(tmp_path, strategies=["cs", "ogm"], shots_list=[400])
    assert main(["compare", "--config", str(cfg), "--trials", "2", "--out", str(tmp_path)]) == 0
    rows = read_csv((tmp_path / "compare.csv").read_text())
    assert tuple(rows[0]) == COMPARE_HEADER
    assert [r["strategy"] for r in rows] == ["cs", "ogm"]
    assert capsys.readouterr().out.startswith(",".join(COMPARE_HEADER))


def test_cli_spectrum(capsys):
    assert main(["spectrum", "--hamiltonian", str(H2), "--sector", "1", "--count", "3"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("# 1-electron")
    assert float(lines[1].split()[1]) == pytest.approx(H2_E_ONE_ELECTRON, abs=1e-12)
    assert len(lines) == 4
    assert main(["spectrum"]) == 1


def test_cli_scan(tmp_path):
    cfg = write_cfg(tmp_path, hamiltonian="", hamiltonians=[str(H2)], shots=5000, trials=2)
    assert main(["scan", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    rows = read_csv((tmp_path / "scan.csv").read_text())
    assert tuple(rows[0]) == SCAN_HEADER and len(rows) == 1
    r = rows[0]
    assert float(r["exact_excited"]) == pytest.approx(H2_E_ONE_ELECTRON, abs=1e-12)
    # for two electrons CISD is exact, so both noiseless columns agree
    assert float(r["qse_noiseless_gs_ref"]) == pytest.approx(float(r["qse_noiseless_cisd_ref"]), abs=1e-10)


def test_cli_errors_exit_nonzero(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "none.json")]) == 1
    assert "error:" in capsys.readouterr().err
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert main(["compare", "--config", str(bad)]) == 1


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "adaptive_qse", "spectrum", "--hamiltonian", str(H4_CHAIN[0]),
                          "--count", "1"], capture_output=True, text=True, check=True)
    assert res.stdout.startswith("# 4-electron")
