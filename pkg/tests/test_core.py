from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from afdxsim.core import (
    Frame,
    NetworkConstants,
    VirtualLinkSpec,
    advance_seq,
    decode_dest_mac,
    encode_dest_mac,
    format_decimal,
    format_mac,
    max_jitter_for_es,
    next_seq,
    resolve_jitter,
    transmission_time,
    validate_vl,
)


def vl(s_max=75, bag=32, source=1, dests=(3, 4), j=None, vl_id=1):
    return VirtualLinkSpec(vl_id, source, dests, bag, Fraction(s_max), j)


def brute_next(seq, times):
    for _ in range(times):
        seq = next_seq(seq)
    return seq


class TestValidate:
    def test_fms_vl1_ok(self):
        assert validate_vl(vl()).ok

    def test_bag_not_power_of_two(self):
        result = validate_vl(vl(bag=3))
        assert [v.message for v in result.violations] == ["bag not a power-of-two in 1..128"]

    def test_s_max_out_of_range(self):
        assert [v.message for v in validate_vl(vl(s_max=1600)).violations] == ["s_max out of [64,1518]"]

    @pytest.mark.parametrize("s_max,ok", [(63, False), (64, True), (1518, True), (Fraction(15181, 10), False)])
    def test_s_max_edges(self, s_max, ok):
        assert validate_vl(vl(s_max=s_max)).ok is ok

    def test_collects_every_violation(self):
        bad = VirtualLinkSpec(1, 3, (3,), 5, Fraction(10), 600_000)
        fields = sorted(v.field for v in validate_vl(bad).violations)
        assert fields == ["bag", "destinations", "j_max", "s_max"]

    def test_empty_destinations(self):
        assert not validate_vl(vl(dests=()))

    @given(
        bag=st.integers(0, 200),
        s_max=st.fractions(min_value=0, max_value=2000, max_denominator=10),
        j=st.one_of(st.none(), st.integers(-10, 1_000_000)),
        source=st.integers(1, 5),
        dests=st.lists(st.integers(1, 5), max_size=3),
    )
    def test_ok_implies_invariants(self, bag, s_max, j, source, dests):
        spec = VirtualLinkSpec(1, source, tuple(dests), bag, s_max, j)
        if validate_vl(spec).ok:
            assert bag in {2**n for n in range(8)}
            assert 64 <= spec.s_max <= 1518
            assert dests and source not in dests
            if j is not None:
                assert 0 < j <= 500_000 and j < bag * 1_000_000


class TestJitterBound:
    def test_vl1_minimum_payload(self):
        assert max_jitter_for_es([vl()]) == Fraction(476, 10)

    def test_empty_set_is_floor(self):
        assert max_jitter_for_es([]) == 40

    def test_two_vls_hand_evaluated(self):
        got = max_jitter_for_es([vl(625, source=3, dests=(1,)), vl(125, source=3, dests=(7,), vl_id=4)])
        assert got == Fraction(1032, 10)

    def test_clamped_to_hard_limit(self):
        many = [vl(700, vl_id=k) for k in range(80)]
        raw = 40 + Fraction(80 * 720 * 8, 100)
        assert raw == 4648
        assert max_jitter_for_es(many) == 500

    def test_mixed_sources_rejected(self):
        with pytest.raises(ValueError):
            max_jitter_for_es([vl(), vl(source=2, vl_id=2)])

    @given(st.lists(st.integers(64, 1518), max_size=100))
    def test_range(self, sizes):
        got = max_jitter_for_es([vl(s, vl_id=k) for k, s in enumerate(sizes)])
        assert 40 <= got <= 500

    @given(st.lists(st.integers(64, 1517), min_size=1, max_size=5), st.data())
    def test_monotone_before_clamp(self, sizes, data):
        k = data.draw(st.integers(0, len(sizes) - 1))
        bigger = list(sizes)
        bigger[k] += data.draw(st.integers(1, 1518 - sizes[k]))
        a = max_jitter_for_es([vl(s, vl_id=i) for i, s in enumerate(sizes)])
        b = max_jitter_for_es([vl(s, vl_id=i) for i, s in enumerate(bigger)])
        assert b >= a

    def test_resolve_keeps_overrides(self):
        out = resolve_jitter([vl(), vl(vl_id=2, j=500_000)])
        assert out[0].j_max_ns == 40_000 + 7_600 + 7_600
        assert out[1].j_max_ns == 500_000

    def test_other_bandwidth(self):
        assert max_jitter_for_es([vl(105)], NetworkConstants(nbw=10)) == 40 + 100


class TestTransmissionTime:
    @pytest.mark.parametrize("size,expected", [(75, Fraction(76, 10)), (105, 10), (1480, 120)])
    def test_values(self, size, expected):
        assert transmission_time(size) == expected

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            transmission_time(0)


class TestSequence:
    @pytest.mark.parametrize("seq,expected", [(255, 1), (0, 1), (37, 38)])
    def test_next(self, seq, expected):
        assert next_seq(seq) == expected

    @pytest.mark.parametrize("seq,k", [(10, 0), (254, 2), (255, 255), (0, 0), (0, 300), (1, 254)])
    def test_advance_matches_brute_force(self, seq, k):
        assert advance_seq(seq, k) == brute_next(seq, k + 1)

    def test_advance_examples(self):
        assert advance_seq(10, 0) == 11
        assert advance_seq(254, 2) == 2
        # 256 steps around a 255-long cycle land one step past the start
        assert advance_seq(255, 255) == 1

    @given(st.integers(0, 255), st.integers(0, 1000))
    def test_advance_property(self, seq, k):
        assert advance_seq(seq, k) == brute_next(seq, k + 1)

    def test_never_zero_and_period_255(self):
        seen, s = [], 1
        for _ in range(255):
            s = next_seq(s)
            assert s != 0
            seen.append(s)
        assert s == 1 and len(set(seen)) == 255
        assert all(x != 1 for x in seen[:-1])

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            next_seq(256)
        with pytest.raises(ValueError):
            advance_seq(3, -1)


class TestMac:
    @pytest.mark.parametrize("vl_id,text", [(1, "03:00:00:00:00:01"), (0, "03:00:00:00:00:00"), (258, "03:00:00:00:01:02")])
    def test_encode(self, vl_id, text):
        assert format_mac(encode_dest_mac(vl_id)) == text

    @given(st.integers(0, 0xFFFF))
    def test_roundtrip(self, v):
        assert decode_dest_mac(encode_dest_mac(v)) == v

    def test_rejects_wide_ids(self):
        with pytest.raises(ValueError):
            encode_dest_mac(0x10000)

    def test_decode_rejects_foreign_prefix(self):
        with pytest.raises(ValueError):
            decode_dest_mac(bytes(6))


def test_frame_defaults_and_rounding():
    spec = vl(Fraction(875, 10))
    assert spec.frame_size == 88
    f = Frame(1, 0, 0, spec.frame_size)
    assert f.payload_len == 17
    with pytest.raises(ValueError):
        Frame(1, 256, 0, 64)


def test_format_decimal():
    assert format_decimal(Fraction(875, 10)) == "87.5"
    assert format_decimal(Fraction(75)) == "75"
    assert format_decimal(Fraction(476, 10), 1) == "47.6"
    assert format_decimal(Fraction(40), 1) == "40.0"
