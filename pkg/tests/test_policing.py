import random
import time
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from afdxsim.core import VirtualLinkSpec
from afdxsim.policing import (
    ACCEPT,
    REJECT,
    AutomatonState,
    BucketParams,
    Place,
    TimeRegression,
    advance_automaton,
    automaton_initial,
    automaton_on_frame,
    bucket_params,
    check_equivalence,
    oracle_initial,
    oracle_on_frame,
    random_equivalence_check,
)

MS = 1_000_000
EXAMPLE = BucketParams(Fraction(100), 8 * MS, 2 * MS)


def reference_bucket(params, arrivals):
    """Plain Fraction bookkeeping, written apart from the scaled-integer oracle."""
    rate = params.s_max / params.bag_ns
    cap = params.s_max + rate * params.j_max_ns
    account, last, out = cap, arrivals[0] if arrivals else 0, []
    for t in arrivals:
        account = min(cap, account + rate * (t - last))
        last = t
        if account >= params.s_max:
            account -= params.s_max
            out.append(ACCEPT)
        else:
            out.append(REJECT)
    return out


def run_oracle(params, arrivals):
    state = oracle_initial(params, arrivals[0])
    out = []
    for t in arrivals:
        d, state = oracle_on_frame(state, params, t)
        out.append((d, state.account(params)))
    return out


def run_automaton(params, arrivals, step=automaton_on_frame):
    state = automaton_initial(arrivals[0])
    out = []
    for t in arrivals:
        d, state = step(state, params, t)
        out.append(d)
    return out


params_st = st.builds(
    lambda bag, s10, jf: BucketParams(Fraction(s10, 10), bag * MS, max(1, min(bag * MS - 1, int(jf * bag * MS)))),
    st.sampled_from([1, 2, 4, 8, 16, 32, 64, 128]),
    st.integers(640, 15180),
    st.floats(0, 1),
)


def arrivals_for(params, gaps):
    t, out = 0, []
    for g in gaps:
        t += g
        out.append(t)
    return out


gap_st = st.one_of(st.integers(1, 3 * 128 * MS), st.sampled_from([1, MS, 2 * MS, 6 * MS, 8 * MS]))


class TestParams:
    def test_vl1_export(self):
        vl1 = VirtualLinkSpec(1, 1, (3, 4), 32, Fraction(75), 500_000)
        p = bucket_params(vl1)
        assert p.rate_bps == Fraction(234375, 100)
        assert p.ac_max == Fraction(76171875, 1_000_000)
        assert p.export() == {"rate_Bps": 2344, "burst_B": 77, "overhead_B": 14, "conform_exceed": "drop"}

    def test_deltas(self):
        assert (EXAMPLE.delta1, EXAMPLE.delta2) == (6 * MS, 2 * MS)
        assert EXAMPLE.rate == Fraction(25, 2)
        assert EXAMPLE.ac_max == 125

    def test_symmetric_case(self):
        p = BucketParams(Fraction(80), 16 * MS, 8 * MS)
        assert p.ac_max == 120 and p.delta1 == p.delta2 == 8 * MS

    @pytest.mark.parametrize("j", [0, 8 * MS, 9 * MS])
    def test_rejects_unsound(self, j):
        with pytest.raises(ValueError):
            BucketParams(Fraction(100), 8 * MS, j)

    def test_speed_compresses_bag(self):
        vl1 = VirtualLinkSpec(1, 1, (3,), 32, Fraction(75), 500_000)
        assert bucket_params(vl1, 2).bag_ns == 16 * MS
        # 1 ms / 7 is not a whole number of nanoseconds
        with pytest.raises(ValueError):
            bucket_params(VirtualLinkSpec(1, 1, (3,), 1, Fraction(75), 1000), 7)

    @given(params_st)
    def test_invariants(self, p):
        assert 0 < p.delta2 < p.bag_ns
        assert p.delta1 + p.delta2 == p.bag_ns
        assert p.s_max <= p.ac_max < 2 * p.s_max


class TestOracle:
    def test_hand_trace(self):
        got = run_oracle(EXAMPLE, [0, 3 * MS, 7 * MS, 14 * MS])
        assert got == [(ACCEPT, 25), (REJECT, Fraction(125, 2)), (ACCEPT, Fraction(25, 2)), (ACCEPT, 0)]

    def test_time_regression(self):
        _, s = oracle_on_frame(oracle_initial(EXAMPLE), EXAMPLE, 5)
        with pytest.raises(TimeRegression):
            oracle_on_frame(s, EXAMPLE, 4)

    @given(params_st, st.lists(gap_st, min_size=1, max_size=20))
    def test_matches_reference_and_bounds(self, p, gaps):
        arrivals = arrivals_for(p, gaps)
        got = run_oracle(p, arrivals)
        assert [d for d, _ in got] == reference_bucket(p, arrivals)
        assert all(0 <= acc <= p.ac_max for _, acc in got)

    @given(params_st, st.lists(gap_st, min_size=1, max_size=10), st.integers(0, 5 * MS))
    def test_quiet_bag_then_accept(self, p, gaps, extra):
        arrivals = arrivals_for(p, gaps)
        state = oracle_initial(p, arrivals[0])
        for t in arrivals:
            _, state = oracle_on_frame(state, p, t)
        d, _ = oracle_on_frame(state, p, arrivals[-1] + p.bag_ns + extra)
        assert d is ACCEPT


class TestAutomaton:
    def test_hand_trace(self):
        s = automaton_initial()
        d, s = automaton_on_frame(s, EXAMPLE, 0)
        assert d is ACCEPT and s.place is Place.S2 and s.phase_deadline == 6 * MS
        d, s = automaton_on_frame(s, EXAMPLE, 3 * MS)
        assert d is REJECT and s.place is Place.S2
        d, s = automaton_on_frame(s, EXAMPLE, 7 * MS)
        assert d is ACCEPT and s.place is Place.S3 and s.s1_entry == 6 * MS and s.phase_deadline == 8 * MS
        s8 = advance_automaton(s, EXAMPLE, 8 * MS)
        assert s8.place is Place.S2 and s8.phase_deadline == 14 * MS
        d, s = automaton_on_frame(s, EXAMPLE, 14 * MS)
        assert d is ACCEPT

    def test_s1_times_out_to_s0(self):
        s = AutomatonState(Place.S2, 6 * MS, None, 0)
        assert advance_automaton(s, EXAMPLE, 8 * MS - 1).place is Place.S1
        assert advance_automaton(s, EXAMPLE, 8 * MS).place is Place.S0

    def test_time_regression(self):
        with pytest.raises(TimeRegression):
            advance_automaton(automaton_initial(10), EXAMPLE, 9)

    @given(params_st, st.lists(gap_st, min_size=1, max_size=20))
    def test_one_accept_per_s1_visit(self, p, gaps):
        state = automaton_initial(0)
        entries = []
        for t in arrivals_for(p, gaps):
            before = advance_automaton(state, p, t)
            d, state = automaton_on_frame(state, p, t)
            if d is ACCEPT and before.place is Place.S1:
                entries.append(before.s1_entry)
        assert len(entries) == len(set(entries))


class TestEquivalence:
    def test_nominal_bag_traffic(self):
        r = check_equivalence(EXAMPLE, [k * 8 * MS for k in range(50)])
        assert r.match and set(r.decisions) == {ACCEPT}

    def test_hand_trace(self):
        r = check_equivalence(EXAMPLE, [0, 3 * MS, 7 * MS, 14 * MS])
        assert r.match and "".join(map(str, r.decisions)) == "ARAA"

    def test_requires_increasing(self):
        with pytest.raises(ValueError):
            check_equivalence(EXAMPLE, [0, 0])

    def test_empty(self):
        assert check_equivalence(EXAMPLE, []).match

    @given(params_st, st.lists(gap_st, min_size=1, max_size=30))
    def test_property(self, p, gaps):
        assert check_equivalence(p, arrivals_for(p, gaps)).match

    @given(params_st, st.lists(gap_st, min_size=1, max_size=15), st.integers(0, 10**12))
    def test_time_translation(self, p, gaps, shift):
        a = arrivals_for(p, gaps)
        assert check_equivalence(p, a).decisions == check_equivalence(p, [t + shift for t in a]).decisions

    def test_seeded_batch(self):
        n, failures = random_equivalence_check(5000, seed=7)
        assert n == 5000 and failures == []

    def test_harness_catches_a_mutant(self):
        # an automaton that uses delta1 in S1 instead of delta2 must be caught
        def mutant(state, params, t):
            state = advance_automaton(state, params, t)
            if state.place is Place.S0:
                return ACCEPT, AutomatonState(Place.S2, t + params.delta1 + 1, None, t)
            if state.place is Place.S1:
                return ACCEPT, AutomatonState(Place.S3, state.phase_deadline, state.s1_entry, t)
            return REJECT, state

        rng = random.Random(3)
        found = False
        for _ in range(200):
            bag = rng.choice([8, 16, 32]) * MS
            p = BucketParams(Fraction(100), bag, rng.randint(1, bag - 1))
            arrivals = [0, p.delta1]
            if run_automaton(p, arrivals, mutant) != reference_bucket(p, arrivals):
                found = True
                break
        assert found


def test_batch_throughput():
    t0 = time.perf_counter()
    random_equivalence_check(1000, seed=1)
    assert time.perf_counter() - t0 < 5
