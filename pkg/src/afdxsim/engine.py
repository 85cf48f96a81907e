"""Deterministic discrete-event executor for the three model levels.

Events are kept in a heap keyed by ``(due_ns, insertion_seq)`` so that
simultaneous events dispatch in a total, reproducible order. Randomness
comes from one master seed split into independent streams per VL and per
purpose; adding a VL to a topology leaves the other VLs' draws unchanged.
"""

from __future__ import annotations

import enum
import heapq
import itertools
import logging
import math
import time
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping

import numpy as np

from .core import Frame, advance_seq, exact, next_seq
from .network import (
    RedundancyState,
    TimedChannel,
    TopologyError,
    TopologySpec,
    calibrate,
    channel_delay,
    period_start,
    reachable_end_systems,
    route,
    sample_interval,
    switched_hop,
)
from .policing import (
    ACCEPT,
    automaton_initial,
    automaton_on_frame,
    bucket_params,
    oracle_initial,
    oracle_on_frame,
)
from .trace import EventKind, TraceEvent, TraceLog

log = logging.getLogger(__name__)

DURATION_PRESETS = {"short": 10, "medium": 60, "long": 300}


class ModelLevel(str, enum.Enum):
    TIMED_CHANNEL = "timed_channel"
    DIRECT_VL = "direct_vl"
    SWITCHED_VL = "switched_vl"

    @classmethod
    def parse(cls, text: str) -> "ModelLevel":
        short = {"tc": cls.TIMED_CHANNEL, "dvl": cls.DIRECT_VL, "svl": cls.SWITCHED_VL}
        return short.get(text) or cls(text)


class Pacing(str, enum.Enum):
    FAST = "fast"
    REALTIME = "realtime"


class PacingMismatch(ValueError):
    pass


_PURPOSE = {"jitter": 1, "channel": 2, "hop": 3, "rx": 4}


@dataclass(frozen=True)
class Scenario:
    topology: TopologySpec
    model: ModelLevel = ModelLevel.TIMED_CHANNEL
    duration_s: Fraction = Fraction(60)
    speed: Fraction = Fraction(1)
    seed: int = 0
    pacing: Pacing = Pacing.FAST
    redundant: bool = False
    policer: str = "automaton"
    # (vl_id, period index) -> emission offset in ns, replacing the jitter draw
    emission_offsets: Mapping[tuple[int, int], int] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "model", ModelLevel.parse(self.model) if isinstance(self.model, str) else self.model)
        object.__setattr__(self, "pacing", Pacing(self.pacing))
        object.__setattr__(self, "duration_s", exact(self.duration_s))
        object.__setattr__(self, "speed", exact(self.speed))
        if self.duration_s <= 0:
            raise ValueError("duration must be positive")
        if self.speed <= 0:
            raise ValueError("speed must be positive")
        if self.policer not in ("automaton", "oracle"):
            raise ValueError(f"unknown policer {self.policer!r}")

    @property
    def horizon_ns(self) -> int:
        return math.ceil(self.duration_s * 1_000_000_000)


@dataclass(frozen=True)
class PacingReport:
    events: int
    max_drift_ns: int
    mean_drift_ns: float
    elapsed_ns: int
    virtual_ns: int
    bound_ns: int
    late_events: int

    @property
    def mean_drift_fraction(self) -> float:
        return self.mean_drift_ns / self.elapsed_ns if self.elapsed_ns else 0.0

    @property
    def exceeded(self) -> bool:
        return self.late_events > 0


class Engine:
    """One simulation run. Not reusable: call :meth:`run` once."""

    def __init__(self, scenario: Scenario, observers: Iterable[Callable[[TraceEvent], None]] = ()):
        self.scenario = scenario
        self.observers = list(observers)
        topo = scenario.topology
        problems = topo.validate()
        if problems:
            vl, msg = problems[0]
            raise TopologyError(f"VL {vl}: {msg}")
        missing = topo.missing_bounds()
        if missing:
            vl, dst = missing[0]
            raise TopologyError(f"VL {vl}: no channel bounds for destination ES{dst}")
        if scenario.model is ModelLevel.SWITCHED_VL:
            absent = [v for v in topo.vls if v not in topo.ingress]
            if absent:
                raise TopologyError(f"VL {absent[0]}: no ingress switch port for the switched model")
            topo = calibrate(topo)
            self._reach = reachable_end_systems(topo)
        self.topo = topo
        self.networks = (0, 1) if scenario.redundant else (0,)
        self.trace: list[TraceEvent] = []
        self._queue: list = []
        self._counter = itertools.count()
        self._streams: dict[tuple, np.random.Generator] = {}
        self._seq = {v: 0 for v in topo.vls}
        self._period = {v: exact(vl.bag_ns) / scenario.speed for v, vl in topo.vls.items()}
        self._channels = {
            (net, v, d): TimedChannel(topo.channel(v, d)) for net in self.networks for v, _, d in topo.paths()
        }
        self._policers = {}
        if scenario.model is ModelLevel.SWITCHED_VL:
            for sw in topo.switches.values():
                for v in sw.policed_vls:
                    params = bucket_params(topo.vls[v], scenario.speed)
                    for net in self.networks:
                        state = automaton_initial() if scenario.policer == "automaton" else oracle_initial(params)
                        self._policers[(net, sw.switch_id, v)] = [params, state]
        if scenario.redundant:
            window = {v: math.ceil(p) for v, p in self._period.items()}
            self._redundancy = {es: RedundancyState(window) for es in topo.end_systems}
        self._done = False
        self.now = 0

    # -- plumbing ----------------------------------------------------------

    def stream(self, vl_id: int, purpose: str, *key: int) -> np.random.Generator:
        k = (vl_id, _PURPOSE[purpose], *key)
        gen = self._streams.get(k)
        if gen is None:
            seq = np.random.SeedSequence(self.scenario.seed & (2**64 - 1), spawn_key=k)
            gen = self._streams[k] = np.random.default_rng(seq)
        return gen

    def _push(self, due: int, kind: str, payload: tuple) -> None:
        heapq.heappush(self._queue, (due, next(self._counter), kind, payload))

    def _record(self, t, kind, vl_id, dst, seq, latency=None) -> None:
        ev = TraceEvent(t, kind, vl_id, self.topo.vls[vl_id].source, dst, seq, latency)
        self.trace.append(ev)
        for obs in self.observers:
            obs(ev)

    # -- emission ----------------------------------------------------------

    def _emission_time(self, vl_id: int, i: int) -> int:
        start = period_start(i, self.topo.vls[vl_id].bag_ns, self.scenario.speed)
        offset = self.scenario.emission_offsets.get((vl_id, i))
        if offset is None:
            if self.scenario.model is ModelLevel.TIMED_CHANNEL:
                offset = 0
            else:
                offset = sample_interval(self.stream(vl_id, "jitter"), 0, self.topo.vls[vl_id].j_max_ns)
        t = start + offset
        if t < 0:
            raise ValueError(f"VL {vl_id}: period {i} emission offset puts it before time 0")
        return t

    def _schedule_emit(self, vl_id: int, i: int, after: int | None) -> None:
        vl = self.topo.vls[vl_id]
        if period_start(i, vl.bag_ns, self.scenario.speed) >= self.scenario.horizon_ns:
            return
        t = self._emission_time(vl_id, i)
        if after is not None and t <= after:
            raise ValueError(f"VL {vl_id}: period {i} would be emitted at {t} ns, not after the previous frame")
        self._push(t, "emit", (vl_id, i))

    def _on_emit(self, t: int, vl_id: int, i: int) -> None:
        vl = self.topo.vls[vl_id]
        seq = self._seq[vl_id]
        frame = Frame(vl_id, seq, t, vl.frame_size)
        self._record(t, EventKind.EMITTED, vl_id, None, seq)
        skipped = 0
        while period_start(i + skipped + 1, vl.bag_ns, self.scenario.speed) <= t:
            skipped += 1
            seq = next_seq(seq)
            self._record(t, EventKind.SKIPPED_PERIOD, vl_id, None, seq)
        self._seq[vl_id] = advance_seq(frame.seq_no, skipped)
        self._schedule_emit(vl_id, i + skipped + 1, t)
        for net in self.networks:
            self._transport(frame, t, net)

    def _transport(self, frame: Frame, t: int, net: int) -> None:
        vl = self.topo.vls[frame.vl_id]
        model = self.scenario.model
        if model is ModelLevel.TIMED_CHANNEL:
            for d in vl.destinations:
                exit_t = self._channels[(net, vl.vl_id, d)].enter(t, self.stream(vl.vl_id, "channel", d, net))
                self._push(exit_t, "deliver", (frame, d, net))
        elif model is ModelLevel.DIRECT_VL:
            for d in vl.destinations:
                delay = channel_delay(self.topo.channel(vl.vl_id, d), self.stream(vl.vl_id, "rx", d, net))
                self._push(t + delay, "deliver", (frame, d, net))
        else:
            sw, port = self.topo.ingress[vl.vl_id]
            self._on_arrive(t, sw, port, frame, frozenset(vl.destinations), net)

    # -- switched model ----------------------------------------------------

    def _police(self, t: int, sw_id: str, frame: Frame, net: int) -> bool:
        slot = self._policers[(net, sw_id, frame.vl_id)]
        params, state = slot
        step = automaton_on_frame if self.scenario.policer == "automaton" else oracle_on_frame
        decision, slot[1] = step(state, params, t)
        kind = EventKind.ACCEPTED if decision is ACCEPT else EventKind.REJECTED
        self._record(t, kind, frame.vl_id, None, frame.seq_no)
        return decision is ACCEPT

    def _on_arrive(self, t: int, sw_id: str, port: int, frame: Frame, targets: frozenset, net: int) -> None:
        sw = self.topo.switches[sw_id]
        if frame.vl_id in sw.policed_vls and not self._police(t, sw_id, frame, net):
            return
        outs = route(sw, port, frame.dest_mac)
        covered: set[int] = set()
        for out in outs or ():
            reach = (targets & self._reach[(sw_id, out)]) - covered
            if not reach:
                continue
            covered |= reach
            fwd = switched_hop(sw, frame.vl_id, frame.size, t, self.stream(frame.vl_id, "hop", net), self.topo.consts)
            peer = sw.ports[out]
            if peer.kind == "es":
                self._push(fwd, "deliver", (frame, peer.node, net))
            else:
                self._push(fwd, "arrive", (peer.node, peer.port, frame, frozenset(reach), net))
        for d in sorted(targets - covered):
            self._record(t, EventKind.FILTERED, frame.vl_id, d, frame.seq_no)

    # -- delivery ------------------------------------------------------------

    def _on_deliver(self, t: int, frame: Frame, dst: int, net: int) -> None:
        if self.scenario.redundant and not self._redundancy[dst].accept(frame.vl_id, frame.seq_no, t):
            self._record(t, EventKind.DISCARDED_DUP, frame.vl_id, dst, frame.seq_no)
            return
        self._record(t, EventKind.DELIVERED, frame.vl_id, dst, frame.seq_no, t - frame.emit_time)

    # -- main loop -----------------------------------------------------------

    def _dispatch(self, due: int, kind: str, payload: tuple) -> None:
        self.now = due
        if kind == "emit":
            self._on_emit(due, *payload)
        elif kind == "deliver":
            self._on_deliver(due, *payload)
        else:
            self._on_arrive(due, *payload)

    def _start(self) -> None:
        if self._done:
            raise RuntimeError("engine instances run once")
        self._done = True
        for vl_id in self.topo.vls:
            self._schedule_emit(vl_id, 0, None)

    def run(self) -> TraceLog:
        self._start()
        horizon = self.scenario.horizon_ns
        queue = self._queue
        while queue and queue[0][0] < horizon:
            due, _, kind, payload = heapq.heappop(queue)
            self._dispatch(due, kind, payload)
        return TraceLog(self.trace)

    def run_paced(
        self,
        clock: Callable[[], int] = time.monotonic_ns,
        sleep: Callable[[float], None] = time.sleep,
        drift_bound_ns: int = 1_000_000,
    ) -> tuple[TraceLog, PacingReport]:
        """Dispatch each event no earlier than its virtual due time in wall clock."""
        if self.scenario.pacing is not Pacing.REALTIME:
            raise PacingMismatch("pacing mode mismatch: scenario is not realtime")
        self._start()
        horizon = self.scenario.horizon_ns
        queue = self._queue
        origin = clock()
        drifts = []
        late = 0
        while queue and queue[0][0] < horizon:
            due, _, kind, payload = heapq.heappop(queue)
            target = origin + due
            now = clock()
            while now < target:
                sleep((target - now) / 1e9)
                now = clock()
            drift = now - target
            drifts.append(drift)
            if drift > drift_bound_ns:
                late += 1
            self._dispatch(due, kind, payload)
        end = origin + horizon
        now = clock()
        while now < end:
            sleep((end - now) / 1e9)
            now = clock()
        if late:
            log.warning("%d events dispatched more than %d ns late", late, drift_bound_ns)
        report = PacingReport(
            events=len(drifts),
            max_drift_ns=max(drifts, default=0),
            mean_drift_ns=sum(drifts) / len(drifts) if drifts else 0.0,
            elapsed_ns=now - origin,
            virtual_ns=horizon,
            bound_ns=drift_bound_ns,
            late_events=late,
        )
        return TraceLog(self.trace), report

    def in_flight(self) -> Counter:
        """Frame copies still travelling at the end of the run, per (vl_id, dst)."""
        out: Counter = Counter()
        for _, _, kind, payload in self._queue:
            if kind == "deliver":
                frame, dst, _ = payload
                out[(frame.vl_id, dst)] += 1
            elif kind == "arrive":
                _, _, frame, targets, _ = payload
                for d in targets:
                    out[(frame.vl_id, d)] += 1
        return out


def run(scenario: Scenario, observers: Iterable[Callable[[TraceEvent], None]] = ()) -> TraceLog:
    return Engine(scenario, observers).run()


def run_paced(scenario: Scenario, **kwargs) -> tuple[TraceLog, PacingReport]:
    return Engine(scenario).run_paced(**kwargs)
