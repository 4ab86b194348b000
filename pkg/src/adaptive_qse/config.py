"""Experiment configuration loaded from JSON."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

from .driver import CHEMICAL_ACCURACY, ESTIMATORS, STRATEGIES, BudgetPolicy
from .gevp import RegularizationConfig
from .strategies.derandomized import DEFAULT_EPSILON
from .strategies.ogm import DEFAULT_T

STATE_KINDS = ("exact_gs", "cisd", "file")
EXCITATION_NAMES = ("singles_annihilation", "two_plus_one")
STRATEGY_NAMES = STRATEGIES + ("uniform_cs", "naive_equal")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class StateSpec:
    """How to obtain a state: an exact sector eigenstate, a CISD state, or a JSON file."""

    kind: str = "exact_gs"
    sector: int | None = None  # electrons; None = fixture value
    rank: int = 0
    hf_occupation: str | None = None
    path: str | None = None

    @classmethod
    def from_doc(cls, doc: Any, base: Path) -> StateSpec:
        if isinstance(doc, str):
            doc = {"kind": doc}
        if not isinstance(doc, dict):
            raise ConfigError(f"state spec must be a string or object, got {doc!r}")
        unknown = set(doc) - {"kind", "sector", "rank", "hf_occupation", "path"}
        if unknown:
            raise ConfigError(f"unknown state-spec keys {sorted(unknown)}")
        spec = cls(**doc)
        if spec.kind not in STATE_KINDS:
            raise ConfigError(f"state kind must be one of {STATE_KINDS}, got {spec.kind!r}")
        if spec.kind == "file":
            if not spec.path:
                raise ConfigError("file state needs a path")
            spec = replace(spec, path=str(_resolve(spec.path, base)))
        if spec.rank < 0:
            raise ConfigError("state rank must be >= 0")
        return spec


def _resolve(p: str, base: Path) -> Path:
    path = Path(p)
    if not path.is_absolute():
        path = base / path
    if not path.exists():
        raise ConfigError(f"referenced file does not exist: {path}")
    return path


@dataclass(frozen=True)
class ExperimentConfig:
    hamiltonian: str = ""
    hamiltonian_format: str = "auto"
    hamiltonians: tuple[str, ...] = ()
    label: str = ""
    reference: StateSpec = field(default_factory=StateSpec)
    quantum_state: StateSpec = field(default_factory=StateSpec)
    excitations: str | tuple = "singles_annihilation"
    target_rank: int = 0
    strategy: str = "lbcs"
    strategies: tuple[str, ...] = ()
    shots: int = 1000
    shots_list: tuple[int, ...] = ()
    iterations: int = 5
    conv_tol: float = CHEMICAL_ACCURACY
    epsilon: float | None = 1e-4  # None: 1 / shots^2
    n_lev: int = 20
    dcs_epsilon: float = DEFAULT_EPSILON
    ogm_T: float = DEFAULT_T
    split_rule: str = "proportional_l1"
    split_fraction: float = 0.5
    estimator: str = "dressed"
    seed: int = 0
    trials: int = 10
    workers: int = 1

    def __post_init__(self):
        for name in ("shots", "iterations", "n_lev", "trials", "workers"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.shots < 2:
            raise ConfigError("shots must be at least 2 (one each for H_d and S_d)")
        if any(s < 2 for s in self.shots_list):
            raise ConfigError("every entry of shots_list must be >= 2")
        if self.epsilon is not None and self.epsilon < 0:
            raise ConfigError("epsilon must be >= 0 or null")
        if not self.conv_tol > 0:
            raise ConfigError("conv_tol must be > 0")
        if self.dcs_epsilon <= 0 or self.ogm_T <= 0:
            raise ConfigError("dcs_epsilon and ogm_T must be > 0")
        for s in (self.strategy,) + tuple(self.strategies):
            if s not in STRATEGY_NAMES:
                raise ConfigError(f"unknown strategy {s!r}; expected one of {STRATEGY_NAMES}")
        if self.estimator not in ESTIMATORS:
            raise ConfigError(f"estimator must be one of {ESTIMATORS}")
        if isinstance(self.excitations, str) and self.excitations not in EXCITATION_NAMES:
            raise ConfigError(f"excitations must be one of {EXCITATION_NAMES} or a list of ladder products")
        if self.target_rank < 0:
            raise ConfigError("target_rank must be >= 0")
        try:
            self.budget(self.shots)
        except ValueError as err:
            raise ConfigError(str(err)) from None

    def regularization(self, shots: int | None = None) -> RegularizationConfig:
        n = self.shots if shots is None else shots
        eps = 1.0 / n ** 2 if self.epsilon is None else self.epsilon
        return RegularizationConfig(eps, self.n_lev)

    def budget(self, shots: int | None = None) -> BudgetPolicy:
        return BudgetPolicy(self.shots if shots is None else shots, self.split_rule, self.split_fraction)

    @property
    def compare_strategies(self) -> tuple[str, ...]:
        return self.strategies or (self.strategy,)

    @property
    def compare_shots(self) -> tuple[int, ...]:
        return self.shots_list or (self.shots,)

    @classmethod
    def from_dict(cls, doc: dict, base: Path | str = ".") -> ExperimentConfig:
        base = Path(base)
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known - {"budget"}
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        kw = dict(doc)
        if "budget" in kw:
            b = kw.pop("budget")
            kw["split_rule"] = b.get("split_rule", cls.split_rule)
            kw["split_fraction"] = b.get("fraction", cls.split_fraction)
        if kw.get("hamiltonian"):
            kw["hamiltonian"] = str(_resolve(kw["hamiltonian"], base))
        kw["hamiltonians"] = tuple(str(_resolve(p, base)) for p in kw.get("hamiltonians", ()))
        if not kw.get("hamiltonian") and not kw["hamiltonians"]:
            raise ConfigError("config needs 'hamiltonian' or 'hamiltonians'")
        for key in ("reference", "quantum_state"):
            if key in kw:
                kw[key] = StateSpec.from_doc(kw[key], base)
        for key in ("strategies", "shots_list"):
            if key in kw:
                kw[key] = tuple(kw[key])
        if isinstance(kw.get("excitations"), list):
            kw["excitations"] = tuple(tuple(tuple(f) for f in prod) for prod in kw["excitations"])
        try:
            return cls(**kw)
        except TypeError as err:
            raise ConfigError(str(err)) from None

    @classmethod
    def load(cls, path) -> ExperimentConfig:
        path = Path(path)
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as err:
            raise ConfigError(f"{path}: line {err.lineno}, column {err.colno}: {err.msg}") from None
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: top level must be an object")
        return cls.from_dict(doc, path.parent)
