import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from strategies import two_types
from teamdyn.dynamics import (
    IDENTITY,
    ArrivalPolicy,
    AssessmentModel,
    CellClass,
    StartClass,
    classify_start,
    gain,
    is_stable,
    run_dynamics,
    step,
    three_type_field,
    vector_field,
)
from teamdyn.model import AgentTypeSpec, ModelParams, TeamModelError, disutility

T = AgentTypeSpec
SYM = (T(0.1), T(0.1))
P0 = ModelParams(0.0, 1.0, 0.0)
PREVIEW = ModelParams(0.025, 5.0, 0.1)
BIASED = ModelParams(0.025, 5.0, 0.2)


def test_gain_example():
    g = gain((5, 4), 1, SYM, P0)
    assert g == pytest.approx(0.05 - 0.05061728395061729, rel=1e-12)
    assert g == disutility((5, 5), SYM, P0) - disutility((5, 4), SYM, P0)


def test_assessment_biases_shift_gain():
    exact = gain((5, 4), 1, SYM, PREVIEW)
    assert gain((5, 4), 1, SYM, PREVIEW, AssessmentModel(utility_gain_bias=0.3)) == pytest.approx(
        exact + 0.3)
    assert gain((5, 4), 1, SYM, PREVIEW, AssessmentModel(accuracy_gain_bias=0.3)) == pytest.approx(
        exact + 0.975 * 0.3)


def test_assessment_noise_is_keyed():
    a = AssessmentModel(noise_std=0.1, seed=7)
    g1 = gain((5, 4), 1, SYM, P0, a, key=(3,))
    assert g1 == gain((5, 4), 1, SYM, P0, a, key=(3,))
    assert g1 != gain((5, 4), 1, SYM, P0, a, key=(4,))
    assert g1 != gain((5, 4), 0, SYM, P0, a, key=(3,))


def test_step_examples():
    assert step((5, 5), 0, SYM, P0) == (False, (5, 5))
    assert step((5, 0), 1, SYM, P0) == (True, (5, 1))


def test_zero_gain_is_rejected():
    # engineered tie: the perceived change is cancelled exactly by the bias
    g = gain((5, 4), 1, SYM, P0)
    assert step((5, 4), 1, SYM, P0, AssessmentModel(utility_gain_bias=-g)) == (False, (5, 4))


def test_run_examples():
    traj = run_dynamics((5, 0), ArrivalPolicy(), SYM, P0)
    assert traj.terminal == (5, 5) and traj.terminated_reason == "stable"
    traj = run_dynamics((10, 8), ArrivalPolicy(), SYM, ModelParams(0.01, 1, 0))
    assert traj.terminal == (10, 8)


def test_terminal_is_fixed_point():
    traj = run_dynamics((2, 9), ArrivalPolicy(), (T(0.1), T(0.05)), PREVIEW)
    again = run_dynamics(traj.terminal, ArrivalPolicy(), (T(0.1), T(0.05)), PREVIEW)
    assert not any(again.accepted_flags) and again.terminal == traj.terminal


def test_step_limit_reason():
    # a strong negative bias makes every addition look beneficial
    assess = AssessmentModel(utility_gain_bias=-1.0)
    traj = run_dynamics((1, 1), ArrivalPolicy(), SYM, P0, assess, step_limit=25)
    assert traj.terminated_reason == "step-limit"
    assert sum(traj.terminal) == 2 + 25


def test_policies():
    seq = ArrivalPolicy("fixed-sequence", (1, 1, 0))
    it = seq.arrivals(2)
    assert [next(it) for _ in range(6)] == [1, 1, 0, 1, 1, 0]
    rnd = ArrivalPolicy("seeded-uniform-random", seed=3)
    a, b = rnd.arrivals(3), rnd.arrivals(3)
    assert [next(a) for _ in range(20)] == [next(b) for _ in range(20)]
    with pytest.raises(TeamModelError):
        ArrivalPolicy("round-robin")
    with pytest.raises(TeamModelError):
        ArrivalPolicy("fixed-sequence")


def test_trajectory_records():
    traj = run_dynamics((5, 3), ArrivalPolicy(), SYM, P0)
    recs = list(traj.records())
    assert [r[0] for r in recs] == list(range(1, len(recs) + 1))
    assert recs[-1][3] == traj.terminal


def test_field_examples():
    assert vector_field(5, 5, SYM, P0).cell(3, 3) is CellClass.STAY
    assert vector_field(1, 1, SYM, P0).cell(1, 1) is CellClass.STAY
    assert vector_field(40, 40, SYM, BIASED).cell(40, 40) is CellClass.STAY
    biased = vector_field(40, 40, SYM, BIASED, AssessmentModel(utility_gain_bias=-0.12))
    assert biased.cell(40, 40) is CellClass.ADD_EITHER


def test_field_records_order():
    grid = vector_field(3, 2, SYM, PREVIEW)
    assert [(r[0], r[1]) for r in grid.records()] == [
        (1, 1), (1, 2), (2, 1), (2, 2), (3, 1), (3, 2)]


def test_field_thread_independent_with_noise():
    a = AssessmentModel(noise_std=0.01, seed=5)
    g1 = vector_field(15, 12, SYM, PREVIEW, a, threads=1)
    g8 = vector_field(15, 12, SYM, PREVIEW, a, threads=8)
    assert np.array_equal(g1.gain_a, g8.gain_a) and g1.classes == g8.classes


def test_classify_examples():
    assert classify_start((3, 7), SYM, P0) is StartClass.REACHES_ACCURACY_OPTIMAL
    # an axis-adjacent start under the preview parameters drifts down the slope
    assert classify_start((30, 1), SYM, PREVIEW) is StartClass.MOVES_AWAY
    stays = [c for c in [(a, b) for a in range(5, 40, 5) for b in range(5, 40, 5)]
             if vector_field(c[0], c[1], SYM, PREVIEW).cell(*c) is CellClass.STAY
             and abs(c[0] - c[1]) > 2]
    assert stays
    assert classify_start(stays[0], SYM, PREVIEW) is StartClass.STATIONARY


def test_three_type_symmetric_stay():
    field = three_type_field((5, 5, 5), (T(0.1),) * 3, P0)
    assert field.cell((4, 4, 4)) == frozenset()


def test_three_type_permutation():
    types = (T(0.12), T(0.1), T(0.08))
    f = three_type_field((4, 5, 3), types, PREVIEW)
    perm = (2, 0, 1)
    g = three_type_field((3, 4, 5), tuple(types[i] for i in perm), PREVIEW)
    expected = np.transpose(f.gains, perm + (3,))[..., list(perm)]
    assert np.allclose(g.gains, expected, rtol=1e-12, atol=1e-15)


# -- properties --------------------------------------------------------------

@settings(max_examples=15)
@given(two_types(), st.floats(0.2, 6), st.floats(0, 1), st.floats(0, 0.3),
       st.tuples(st.integers(1, 15), st.integers(1, 15)),
       st.sampled_from(["alternating", "fixed-sequence", "seeded-uniform-random"]))
def test_stable_terminal_has_nonnegative_gains(types, alpha, beta, lam, start, kind):
    params = ModelParams(lam, alpha, beta)
    policy = ArrivalPolicy(kind, (0, 1, 1) if kind == "fixed-sequence" else None, 11)
    traj = run_dynamics(start, policy, types, params, step_limit=400)
    if traj.terminated_reason == "stable":
        assert is_stable(traj.terminal, types, params)
        assert all(gain(traj.terminal, k, types, params) >= 0 for k in range(2))


_ORDER = {CellClass.ADD_EITHER: 0, CellClass.ADD_A: 1, CellClass.ADD_B: 1, CellClass.STAY: 2}


@settings(max_examples=10)
@given(two_types(), st.floats(0.2, 6), st.floats(0, 1), st.floats(0, 0.3),
       st.floats(-0.05, 0.05), st.floats(0.0, 0.05))
def test_bias_monotone(types, alpha, beta, lam, b1, db):
    params = ModelParams(lam, alpha, beta)
    lo = vector_field(12, 12, types, params, AssessmentModel(utility_gain_bias=b1))
    hi = vector_field(12, 12, types, params, AssessmentModel(utility_gain_bias=b1 + db))
    assert np.all((hi.gain_a < 0) <= (lo.gain_a < 0))
    assert np.all((hi.gain_b < 0) <= (lo.gain_b < 0))
    for r_lo, r_hi in zip(lo.classes, hi.classes):
        assert all(_ORDER[h] >= _ORDER[l] for l, h in zip(r_lo, r_hi))


@settings(max_examples=10)
@given(two_types(), st.floats(0.2, 6))
def test_never_both_at_lambda_zero(types, alpha):
    grid = vector_field(25, 25, types, ModelParams(0.0, alpha, 0.0))
    assert grid.counts()[CellClass.ADD_EITHER] == 0


_SWAP = {CellClass.ADD_A: CellClass.ADD_B, CellClass.ADD_B: CellClass.ADD_A,
         CellClass.STAY: CellClass.STAY, CellClass.ADD_EITHER: CellClass.ADD_EITHER}


@settings(max_examples=10)
@given(two_types(), st.floats(0.2, 6), st.floats(0, 1), st.floats(0, 0.3))
def test_mirror_symmetry(types, alpha, beta, lam):
    params = ModelParams(lam, alpha, beta)
    f = vector_field(9, 7, types, params)
    g = vector_field(7, 9, types[::-1], params)
    for a in range(1, 10):
        for b in range(1, 8):
            assert g.cell(b, a) is _SWAP[f.cell(a, b)]


@given(two_types(), st.floats(0.2, 6), st.floats(0, 1), st.floats(0, 1),
       st.tuples(st.integers(0, 30), st.integers(1, 30)), st.integers(0, 1))
def test_identity_assessment_is_exact_difference(types, alpha, beta, lam, counts, k):
    params = ModelParams(lam, alpha, beta)
    nxt = tuple(c + (i == k) for i, c in enumerate(counts))
    assert gain(counts, k, types, params, IDENTITY) == (
        disutility(nxt, types, params) - disutility(counts, types, params))
