import numpy as np
import pytest

from adaptive_qse.shots import batches, execute_plan, execute_plan_counts
from adaptive_qse.statevector import Statevector, basis_probabilities
from adaptive_qse.strategies import MeasurementPlan
from adaptive_qse.strategies.base import text_to_codes


def plan_of(*labels, kind="dcs"):
    return MeasurementPlan(kind, [text_to_codes(l) for l in labels])


@pytest.fixture
def state():
    r = np.random.default_rng(2)
    return Statevector.from_amplitudes(r.normal(size=8) + 1j * r.normal(size=8))


def test_batches_group_in_first_appearance_order():
    b = batches(plan_of("ZZX", "XXX", "ZZX", "ZZX"))
    assert [("".join("IXYZ"[c] for c in x.basis), x.count) for x in b] == [("ZZX", 3), ("XXX", 1)]


def test_outcomes_follow_plan_order(state, rng):
    plan = plan_of("ZZZ", "XYZ", "ZZZ")
    out = execute_plan(state, plan, rng)
    assert np.array_equal(out.bases, plan.bases)
    assert out.bits.shape == (3, 3) and set(np.unique(out.bits)) <= {0, 1}


def test_basis_state_outcomes_are_deterministic(rng):
    s = Statevector.basis_state("101")
    out = execute_plan(s, plan_of(*["ZZZ"] * 10), rng)
    assert np.all(out.bits == [1, 0, 1])


@pytest.mark.parametrize("fn", [execute_plan, execute_plan_counts])
def test_same_seed_same_outcomes(state, fn):
    plan = plan_of("ZZZ", "XYZ", "YYX", "XYZ")
    a = fn(state, plan, np.random.default_rng(1))
    b = fn(state, plan, np.random.default_rng(1))
    for x, y in zip(vars(a).values(), vars(b).values()):
        assert np.array_equal(x, y)


def test_histograms_match_born_rule(state, rng):
    shots = 40000
    plan = plan_of(*(["XYZ"] * shots))
    p = basis_probabilities(state, "XYZ")
    for fn in (execute_plan, execute_plan_counts):
        res = fn(state, plan, rng)
        if fn is execute_plan:
            idx = res.bits.astype(int) @ [4, 2, 1]
            freq = np.bincount(idx, minlength=8) / shots
        else:
            freq = res.counts[0] / shots
        assert np.all(np.abs(freq - p) <= 5 * np.sqrt(p * (1 - p) / shots) + 1e-12)


def test_counts_total(state, rng):
    plan = plan_of("ZZZ", "XYZ", "ZZZ")
    c = execute_plan_counts(state, plan, rng)
    assert c.shots == 3 and c.counts.sum(axis=1).tolist() == [2, 1]


def test_qubit_mismatch(state, rng):
    with pytest.raises(ValueError, match="mismatch"):
        execute_plan(state, plan_of("ZZ"), rng)
