"""Frame-based token-bucket policing.

Two independent implementations of the same policer:

* the account oracle, which keeps the byte balance explicitly and credits
  it continuously at ``s_max / bag``;
* the four-place timed automaton (S0..S3) that reaches the same decisions
  using only two timer constants, ``delta1 = bag - j_max`` and
  ``delta2 = j_max``.

Both are pure state transformers: ``(state, params, t) -> (decision, state)``.
All arithmetic is exact (integer nanoseconds, integer-scaled byte account),
so :func:`check_equivalence` compares decisions without tolerance.
"""

from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

from .core import NS_PER_MS, VirtualLinkSpec, exact

ETHERNET_OVERHEAD = 14


class Decision(str, enum.Enum):
    ACCEPT = "A"
    REJECT = "R"

    def __str__(self):
        return self.value


ACCEPT = Decision.ACCEPT
REJECT = Decision.REJECT


class TimeRegression(ValueError):
    pass


@dataclass(frozen=True)
class BucketParams:
    s_max: Fraction
    bag_ns: int
    j_max_ns: int

    def __post_init__(self):
        object.__setattr__(self, "s_max", exact(self.s_max))
        if self.s_max <= 0:
            raise ValueError("s_max must be positive")
        if not 0 < self.j_max_ns < self.bag_ns:
            raise ValueError(
                f"policer needs 0 < j_max < bag (got j_max={self.j_max_ns} ns, bag={self.bag_ns} ns)"
            )

    @property
    def delta1(self) -> int:
        return self.bag_ns - self.j_max_ns

    @property
    def delta2(self) -> int:
        return self.j_max_ns

    @property
    def rate(self) -> Fraction:
        """Credit rate in bytes per millisecond."""
        return self.s_max * NS_PER_MS / self.bag_ns

    @property
    def rate_bps(self) -> Fraction:
        """Credit rate in bytes per second (what ``tc police rate`` takes)."""
        return self.rate * 1000

    @property
    def ac_max(self) -> Fraction:
        return self.s_max * (1 + Fraction(self.j_max_ns, self.bag_ns))

    def export(self) -> dict:
        """Policer configuration record for a software switch."""
        return {
            "rate_Bps": math.ceil(self.rate_bps),
            "burst_B": math.ceil(self.ac_max),
            "overhead_B": ETHERNET_OVERHEAD,
            "conform_exceed": "drop",
        }

    # integer scaling used by the account oracle: one unit is
    # 1 / (denominator(s_max) * bag_ns) bytes
    @property
    def _unit_scale(self) -> int:
        return self.s_max.denominator * self.bag_ns

    @property
    def _credit_per_ns(self) -> int:
        return self.s_max.numerator

    @property
    def _threshold(self) -> int:
        return self.s_max.numerator * self.bag_ns

    @property
    def _cap(self) -> int:
        return self.s_max.numerator * (self.bag_ns + self.j_max_ns)


def bucket_params(vl: VirtualLinkSpec, speed: Fraction | int = 1) -> BucketParams:
    """Policer parameters for ``vl``; ``speed`` compresses the BAG."""
    if vl.j_max_ns is None:
        raise ValueError(f"VL {vl.vl_id} has no resolved j_max")
    bag = exact(vl.bag_ns) / exact(speed)
    if bag.denominator != 1:
        raise ValueError(f"VL {vl.vl_id}: BAG / speed is not a whole number of nanoseconds")
    return BucketParams(vl.s_max, int(bag), vl.j_max_ns)


# -- account oracle ------------------------------------------------------


class OracleState(NamedTuple):
    scaled_account: int
    last_update: int

    def account(self, params: BucketParams) -> Fraction:
        """Balance in bytes."""
        return Fraction(self.scaled_account, params._unit_scale)


def oracle_initial(params: BucketParams, t: int = 0) -> OracleState:
    return OracleState(params._cap, t)


def oracle_on_frame(state: OracleState, params: BucketParams, t: int) -> tuple[Decision, OracleState]:
    if t < state.last_update:
        raise TimeRegression(f"arrival at {t} ns precedes last update at {state.last_update} ns")
    account = min(params._cap, state.scaled_account + params._credit_per_ns * (t - state.last_update))
    if account >= params._threshold:
        return ACCEPT, OracleState(account - params._threshold, t)
    return REJECT, OracleState(account, t)


# -- timed automaton ---------------------------------------------------------


class Place(enum.IntEnum):
    S0 = 0  # bucket full
    S1 = 1  # a frame would be accepted
    S2 = 2  # rejecting, next acceptance at the deadline
    S3 = 3  # rejecting after an accept in S1


class AutomatonState(NamedTuple):
    place: Place
    phase_deadline: int | None
    s1_entry: int | None
    last_event: int


def automaton_initial(t: int = 0) -> AutomatonState:
    return AutomatonState(Place.S0, None, None, t)


def advance_automaton(state: AutomatonState, params: BucketParams, t: int) -> AutomatonState:
    """Fire every internal transition due at or before ``t``."""
    if t < state.last_event:
        raise TimeRegression(f"time {t} ns precedes last event at {state.last_event} ns")
    place, deadline, entry = state.place, state.phase_deadline, state.s1_entry
    while deadline is not None and deadline <= t:
        if place is Place.S2:
            place, entry = Place.S1, deadline
            deadline = entry + params.delta2
        elif place is Place.S1:
            # t1 wins over t3 at the same instant
            place, deadline, entry = Place.S0, None, None
        else:
            # t3 then t2 in zero time
            place = Place.S2
            deadline = deadline + params.delta1
    return AutomatonState(place, deadline, entry, t)


def automaton_on_frame(
    state: AutomatonState, params: BucketParams, t: int
) -> tuple[Decision, AutomatonState]:
    state = advance_automaton(state, params, t)
    if state.place is Place.S0:
        return ACCEPT, AutomatonState(Place.S2, t + params.delta1, None, t)
    if state.place is Place.S1:
        return ACCEPT, AutomatonState(Place.S3, state.phase_deadline, state.s1_entry, t)
    return REJECT, state


# -- equivalence harness -------------------------------------------------------


@dataclass(frozen=True)
class EquivalenceResult:
    decisions: tuple[Decision, ...]
    divergence: int | None = None
    oracle_decision: Decision | None = None
    automaton_decision: Decision | None = None

    @property
    def match(self) -> bool:
        return self.divergence is None


def check_equivalence(params: BucketParams, arrivals: Sequence[int]) -> EquivalenceResult:
    """Run both policers from a full bucket and compare decision by decision."""
    for a, b in zip(arrivals, arrivals[1:]):
        if b <= a:
            raise ValueError("arrivals must be strictly increasing")
    start = arrivals[0] if arrivals else 0
    oracle, automaton = oracle_initial(params, start), automaton_initial(start)
    decisions = []
    for index, t in enumerate(arrivals):
        d_oracle, oracle = oracle_on_frame(oracle, params, t)
        d_auto, automaton = automaton_on_frame(automaton, params, t)
        if d_oracle is not d_auto:
            return EquivalenceResult(tuple(decisions), index, d_oracle, d_auto)
        decisions.append(d_oracle)
    return EquivalenceResult(tuple(decisions))


def random_params(rng: random.Random) -> BucketParams:
    """Legal policer parameters: any BAG from the AFDX set, any 0 < j_max < bag."""
    bag_ns = rng.choice((1, 2, 4, 8, 16, 32, 64, 128)) * NS_PER_MS
    s_max = Fraction(rng.randint(640, 15180), 10)
    return BucketParams(s_max, bag_ns, rng.randint(1, bag_ns - 1))


def random_arrivals(rng: random.Random, params: BucketParams, n: int) -> list[int]:
    """Arrival times biased towards the policer's phase boundaries.

    Gaps are mixed from exact multiples of the two timer constants and the
    BAG (to hit boundary instants), off-by-one-ns neighbours of those, and
    plain uniform draws.
    """
    t = rng.randint(0, params.bag_ns)
    out = [t]
    marks = (params.delta1, params.delta2, params.bag_ns)
    for _ in range(n - 1):
        pick = rng.random()
        if pick < 0.4:
            gap = sum(rng.choice(marks) for _ in range(rng.randint(1, 3)))
        elif pick < 0.6:
            gap = rng.choice(marks) + rng.choice((-1, 1))
        else:
            gap = rng.randint(1, 2 * params.bag_ns)
        t += max(gap, 1)
        out.append(t)
    return out


def random_equivalence_check(n_sequences: int, seed: int, params: BucketParams | None = None,
                             max_len: int = 24) -> tuple[int, list[tuple[BucketParams, list[int], EquivalenceResult]]]:
    """Check ``n_sequences`` seeded random arrival sequences.

    Returns the number checked and the list of mismatching cases.
    """
    rng = random.Random(seed)
    failures = []
    for _ in range(n_sequences):
        p = params if params is not None else random_params(rng)
        arrivals = random_arrivals(rng, p, rng.randint(1, max_len))
        result = check_equivalence(p, arrivals)
        if not result.match:
            failures.append((p, arrivals, result))
    return n_sequences, failures
