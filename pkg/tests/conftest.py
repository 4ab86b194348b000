from pathlib import Path

import numpy as np
import pytest

from adaptive_qse.io import load_hamiltonian_full
from adaptive_qse.statevector import SectorSpec, exact_eigenstate
from adaptive_qse.subspace import expand_elements, singles_annihilation

ROOT = Path(__file__).resolve().parents[1]
HAMILTONIANS = ROOT / "data" / "hamiltonians"
CONFIGS = ROOT / "configs"
H2 = HAMILTONIANS / "h2_sto3g.json"
H2_8 = HAMILTONIANS / "h2_631g.json"
H4_CHAIN = sorted(HAMILTONIANS.glob("h4_chain_*.json"))
ALL_FIXTURES = sorted(HAMILTONIANS.glob("*.json"))


@pytest.fixture(scope="session")
def h2_loaded():
    return load_hamiltonian_full(H2)


@pytest.fixture(scope="session")
def h2(h2_loaded):
    return h2_loaded.hamiltonian


@pytest.fixture(scope="session")
def h2_gs(h2):
    return exact_eigenstate(h2, SectorSpec(2))[1]


@pytest.fixture(scope="session")
def h2_ops():
    return singles_annihilation(4)


@pytest.fixture(scope="session")
def h2_exp(h2, h2_ops):
    return expand_elements(h2, h2_ops)


@pytest.fixture(scope="session")
def h2_8_loaded():
    return load_hamiltonian_full(H2_8)


@pytest.fixture(scope="session")
def h2_8_exp(h2_8_loaded):
    return expand_elements(h2_8_loaded.hamiltonian, singles_annihilation(8))


@pytest.fixture(scope="session")
def h2_8_gs(h2_8_loaded):
    return exact_eigenstate(h2_8_loaded.hamiltonian, SectorSpec(2))[1]


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


# acceptance summary ----------------------------------------------------------------

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record_acceptance(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE[number] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
