import cmath
import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import abl_same, fourier, pair_amplitude_factored, pair_amplitude_full, plus
from pigeonsim import Scenario, Verdict, build_scenario, correlation_pattern, pair_same_probability, verify_general
from pigeonsim.pigeonhole import (
    PairResult,
    all_patterns,
    pair_amplitude,
    roots_of_unity_residual,
)

PAIRS = [(1, 2), (1, 3), (2, 3)]

# [DERIVED] brute-force oracle over all 8 configurations, frozen: 1 = SAME, 0 = DIFFERENT
FROZEN_TABLE = {
    (0, 0, 0): (0, 0, 0),
    (0, 0, 1): (0, 1, 1),
    (0, 1, 0): (1, 0, 1),
    (0, 1, 1): (1, 1, 0),
    (1, 0, 0): (1, 1, 0),
    (1, 0, 1): (1, 0, 1),
    (1, 1, 0): (0, 1, 1),
    (1, 1, 1): (0, 0, 0),
}


def test_build_scenario_defaults():
    s = build_scenario(3, 2)
    assert s.outcome == (0, 0, 0)
    assert s.pre.is_normalized() and s.post.is_normalized()
    assert abs(s.ensemble.overlap - (-(1 + 1j) / 4)) <= 1e-12


def test_build_scenario_rejects_single_particle():
    with pytest.raises(ValueError, match="need at least 2 particles"):
        build_scenario(1, 2)


@pytest.mark.parametrize("outcome", [(0, 0), (0, 0, 2), (0, 0, -1)])
def test_build_scenario_rejects_bad_outcome(outcome):
    with pytest.raises(ValueError):
        build_scenario(3, 2, outcome)


def test_pigeonhole_all_pairs_different():
    s = build_scenario(3, 2)
    for i, j in PAIRS:
        assert pair_same_probability(s, i, j) <= 1e-12
        assert abs(pair_amplitude(s, i, j)) <= 1e-12
    pat = correlation_pattern(s)
    assert all(v is Verdict.DIFFERENT for v in pat.verdicts().values())


def test_pattern_flipped_first_particle():
    pat = correlation_pattern(build_scenario(3, 2, (1, 0, 0)))
    assert pat[(1, 2)].verdict is Verdict.SAME
    assert pat[(1, 3)].verdict is Verdict.SAME
    assert pat[(2, 3)].verdict is Verdict.DIFFERENT
    assert pat[(2, 1)] == pat[(1, 2)]


def test_pattern_table_frozen():
    table = all_patterns(3, 2)
    assert set(table) == set(FROZEN_TABLE)
    for outcome, expected in FROZEN_TABLE.items():
        got = tuple(int(table[outcome][p].verdict is Verdict.SAME) for p in PAIRS)
        assert got == expected, outcome


@pytest.mark.parametrize("outcome", list(itertools.product(range(2), repeat=3)))
def test_pattern_matches_oracles(outcome):
    s = build_scenario(3, 2, outcome)
    pre = [plus(2)] * 3
    post = [fourier(2, o) for o in outcome]
    for i, j in PAIRS:
        full = pair_amplitude_full(post, pre, i, j)
        fact = pair_amplitude_factored(post, pre, i, j)
        assert abs(full - fact) <= 1e-12
        assert abs(pair_amplitude(s, i, j) - full) <= 1e-12
        assert abs(pair_same_probability(s, i, j) - abl_same(post, pre, i, j)) <= 1e-12


def test_two_particles_two_boxes():
    s = build_scenario(2, 2)
    assert pair_same_probability(s, 1, 2) <= 1e-12


@pytest.mark.parametrize("N,M", [(3, 2), (4, 2), (4, 3), (5, 3), (5, 4), (6, 5), (6, 2)])
def test_verify_general(N, M):
    rep = verify_general(N, M)
    assert rep.holds
    assert rep.pair_same_prob_max <= 1e-10
    assert rep.roots_of_unity_residual <= 1e-12


def test_general_matches_oracle_n4_m3():
    s = build_scenario(4, 3)
    pre = [plus(3)] * 4
    post = [fourier(3, 0)] * 4
    for i, j in s.shape.pairs():
        assert abs(pair_amplitude(s, i, j) - pair_amplitude_full(post, pre, i, j)) <= 1e-12


def test_also_holds_when_boxes_outnumber_particles():
    assert verify_general(2, 3).holds
    assert verify_general(3, 4).holds


@pytest.mark.parametrize("M", range(2, 12))
def test_roots_of_unity(M):
    assert roots_of_unity_residual(M) <= 1e-12


def test_classify_thresholds():
    assert PairResult.classify(0.0).verdict is Verdict.DIFFERENT
    assert PairResult.classify(1.0).verdict is Verdict.SAME
    assert PairResult.classify(0.5).verdict is Verdict.UNDETERMINED


def test_pattern_json_roundtrip_fields():
    js = correlation_pattern(build_scenario(3, 2, (1, 0, 0))).to_json()
    assert [tuple(r["pair"]) for r in js] == PAIRS
    assert [r["verdict"] for r in js] == ["SAME", "SAME", "DIFFERENT"]


@settings(max_examples=30, deadline=None)
@given(st.tuples(*[st.integers(0, 1)] * 3), st.permutations([1, 2, 3]))
def test_permutation_covariance(outcome, perm):
    # relabelling particles i -> perm[i-1] permutes the outcome and the pair keys together
    base = correlation_pattern(build_scenario(3, 2, outcome))
    permuted_outcome = [None] * 3
    for i, o in enumerate(outcome):
        permuted_outcome[perm[i] - 1] = o
    direct = correlation_pattern(build_scenario(3, 2, permuted_outcome))
    assert base.permuted(perm).verdicts() == direct.verdicts()


@settings(max_examples=30, deadline=None)
@given(st.floats(0, 2 * np.pi), st.floats(0, 2 * np.pi), st.tuples(*[st.integers(0, 1)] * 3))
def test_global_phase_does_not_change_pattern(a, b, outcome):
    s = build_scenario(3, 2, outcome)
    rot = Scenario(s.shape, s.pre * cmath.exp(1j * a), s.post * cmath.exp(1j * b), outcome)
    for i, j in PAIRS:
        assert abs(pair_same_probability(s, i, j) - pair_same_probability(rot, i, j)) <= 1e-12
