"""Adaptive measurement-strategy construction for quantum subspace expansion."""
from .config import ExperimentConfig, StateSpec
from .driver import (BudgetPolicy, IterationTrace, classical_preprocess, measure_and_solve, naive_equal_plan,
                     prepare_strategy, run_adaptive, solve_exact)
from .gevp import GevpError, GevpResult, RegularizationConfig, regularized_solve
from .io import load_hamiltonian, load_statevector, save_hamiltonian
from .pauli import LadderOperatorProduct, PauliString, PauliSum, jw_product
from .shots import execute_plan
from .statevector import SectorSpec, Statevector, cisd_state, exact_eigenstate, sector_spectrum
from .subspace import (ExcitationSet, build_dressed, exact_matrices, expand_elements, rayleigh_quotient,
                       singles_annihilation, two_plus_one)

__version__ = "0.1.0"
