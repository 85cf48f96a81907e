"""Latency, emission-jitter and sequence-gap monitors.

The three checks are pure functions. :class:`MonitorFold` folds them over
a stream of trace events, so the same code serves as an online observer
(``Engine(scenario, observers=[fold.feed])``) and as the offline report
over a TraceLog file.
"""

from __future__ import annotations

import enum
import json
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from .analysis import series_stats
from .core import exact
from .network import TimedChannelSpec, TopologySpec, period_start
from .trace import EventKind, TraceEvent, TraceLog, flagged_csv


class JitterClass(str, enum.Enum):
    TOO_EARLY = "TooEarly"
    OK = "Ok"
    TOO_LATE = "TooLate"
    SKIPPED_PERIOD = "SkippedPeriod"

    def __str__(self):
        return self.value


class LatencyClass(str, enum.Enum):
    BELOW_BCTT = "BelowBcTT"
    IN_BOUNDS = "InBounds"
    ABOVE_WCTT = "AboveWcTT"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class JitterVerdict:
    cls: JitterClass
    jitter_ns: int


@dataclass(frozen=True)
class LatencyVerdict:
    cls: LatencyClass
    latency_ns: int


def classify_jitter(i: int, emit: int, bag_ns: int, j_max_ns: int, speed=1) -> JitterVerdict:
    """Place an emission relative to its period window [i*P, i*P + j_max].

    P = bag / speed; period starts are whole nanoseconds, rounded up when
    P is fractional. Anything at or beyond the next period start is a
    skipped period.
    """
    if i < 0:
        raise ValueError("period index must be non-negative")
    start = period_start(i, bag_ns, speed)
    jitter = emit - start
    if jitter < 0:
        cls = JitterClass.TOO_EARLY
    elif jitter <= j_max_ns:
        cls = JitterClass.OK
    elif emit < period_start(i + 1, bag_ns, speed):
        cls = JitterClass.TOO_LATE
    else:
        cls = JitterClass.SKIPPED_PERIOD
    return JitterVerdict(cls, jitter)


def check_latency(emit: int, recv: int, path: TimedChannelSpec) -> LatencyVerdict:
    if recv < emit:
        raise ValueError(f"reception at {recv} ns precedes emission at {emit} ns")
    latency = recv - emit
    if latency < path.bctt_ns:
        return LatencyVerdict(LatencyClass.BELOW_BCTT, latency)
    if latency > path.wctt_ns:
        return LatencyVerdict(LatencyClass.ABOVE_WCTT, latency)
    return LatencyVerdict(LatencyClass.IN_BOUNDS, latency)


def seq_gap(prev: int, cur: int) -> int:
    """Frames missing between two consecutive receptions."""
    if cur == 0:
        return 0  # sender reset
    if prev == 0:
        return cur - 1
    step = (cur - prev) % 255
    return step - 1 if step else 0


def count_drops(seqs: Iterable[int]) -> int:
    seqs = list(seqs)
    for s in seqs:
        if not 0 <= s <= 255:
            raise ValueError(f"sequence number {s} outside 0..255")
    return sum(seq_gap(a, b) for a, b in zip(seqs, seqs[1:]))


# -- aggregate report ------------------------------------------------------------


@dataclass
class PathSummary:
    vl_id: int
    src: int
    dst: int
    channel: str = ""
    emitted: int = 0
    delivered: int = 0
    rejected: int = 0
    filtered: int = 0
    discarded_dup: int = 0
    skipped_periods: int = 0
    drops: int = 0
    latencies: list[int] = field(default_factory=list, repr=False)
    latency_classes: Counter = field(default_factory=Counter)
    jitter_classes: Counter = field(default_factory=Counter)
    _seqs: list[int] = field(default_factory=list, repr=False)
    _last_rx: int | None = field(default=None, repr=False)

    def as_dict(self) -> dict:
        stats = series_stats(self.latencies).as_dict() if self.latencies else None
        return {
            "vl_id": self.vl_id, "src": self.src, "dst": self.dst, "channel": self.channel,
            "emitted": self.emitted, "delivered": self.delivered, "rejected": self.rejected,
            "filtered": self.filtered, "discarded_dup": self.discarded_dup,
            "skipped_periods": self.skipped_periods, "drops": self.drops,
            "latency_ns": stats,
            "latency_classes": {str(k): v for k, v in sorted(self.latency_classes.items())},
            "jitter_classes": {str(k): v for k, v in sorted(self.jitter_classes.items())},
        }


@dataclass
class MonitorReport:
    paths: list[PathSummary]
    flagged: list[tuple[TraceEvent, str]]
    warnings: list[str]

    def path(self, vl_id: int, dst: int) -> PathSummary:
        for p in self.paths:
            if (p.vl_id, p.dst) == (vl_id, dst):
                return p
        raise KeyError((vl_id, dst))

    @property
    def above_wctt(self) -> int:
        return sum(p.latency_classes[LatencyClass.ABOVE_WCTT] for p in self.paths)

    def to_json(self) -> str:
        doc = {"paths": [p.as_dict() for p in self.paths], "flagged": len(self.flagged), "warnings": self.warnings}
        return json.dumps(doc, indent=2) + "\n"

    def flagged_csv(self) -> str:
        return flagged_csv(self.flagged)

    def to_text(self) -> str:
        head = ("vl", "src", "dst", "chan", "emit", "dlvr", "rej", "filt", "dup", "skip", "drops",
                "lat_min_us", "lat_max_us", "lat_mean_us", "above", "jitter(E/O/L/S)")
        rows = [head]
        for p in self.paths:
            lat = [f"{x / 1000:.3f}" for x in (min(p.latencies), max(p.latencies), sum(p.latencies) / len(p.latencies))] \
                if p.latencies else ["-", "-", "-"]
            j = p.jitter_classes
            jit = "/".join(str(j[c]) for c in JitterClass)
            rows.append((str(p.vl_id), str(p.src), str(p.dst), p.channel or "-", str(p.emitted), str(p.delivered),
                         str(p.rejected), str(p.filtered), str(p.discarded_dup), str(p.skipped_periods),
                         str(p.drops), *lat, str(p.latency_classes[LatencyClass.ABOVE_WCTT]), jit))
        widths = [max(len(r[i]) for r in rows) for i in range(len(head))]
        lines = ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in rows]
        lines += [f"warning: {w}" for w in self.warnings]
        return "\n".join(lines) + "\n"


class MonitorFold:
    """Fold monitors over trace events.

    Every event advances the per-VL period counters, but only events whose
    time lies in ``window`` (half-open ``[lo, hi)``) are tallied.
    """

    def __init__(self, topology: TopologySpec | None = None, speed=1, window: tuple[int, int] | None = None):
        self.topology = topology
        self.speed = exact(speed)
        self.window = window
        self.paths: dict[tuple[int, int], PathSummary] = {}
        self.flagged: list[tuple[TraceEvent, str]] = []
        self.warnings: list[str] = []
        self._period_index: Counter = Counter()
        self._vl_tallies: dict[int, Counter] = defaultdict(Counter)
        self._vl_src: dict[int, int] = {}
        if topology is not None:
            for v, src, d in topology.paths():
                self._path(v, src, d)

    def _path(self, vl_id: int, src: int, dst: int) -> PathSummary:
        p = self.paths.get((vl_id, dst))
        if p is None:
            ch = self.topology.channels.get((vl_id, dst)) if self.topology else None
            p = self.paths[(vl_id, dst)] = PathSummary(vl_id, src, dst, ch.name if ch else "")
        self._vl_src[vl_id] = src
        return p

    def _in_window(self, t: int) -> bool:
        return self.window is None or self.window[0] <= t < self.window[1]

    def feed(self, ev: TraceEvent) -> None:
        kind = ev.event
        self._vl_src.setdefault(ev.vl_id, ev.src)
        if kind in (EventKind.EMITTED, EventKind.SKIPPED_PERIOD):
            i = self._period_index[ev.vl_id]
            self._period_index[ev.vl_id] += 1
            if not self._in_window(ev.time):
                return
            tally = self._vl_tallies[ev.vl_id]
            if kind is EventKind.SKIPPED_PERIOD:
                tally["skipped"] += 1
                return
            tally["emitted"] += 1
            vl = self.topology.vls.get(ev.vl_id) if self.topology else None
            if vl is not None:
                verdict = classify_jitter(i, ev.time, vl.bag_ns, vl.j_max_ns, self.speed)
                tally[verdict.cls] += 1
            return
        if not self._in_window(ev.time):
            return
        if kind is EventKind.REJECTED:
            self._vl_tallies[ev.vl_id]["rejected"] += 1
            return
        if kind is EventKind.ACCEPTED or ev.dst is None:
            return
        p = self._path(ev.vl_id, ev.src, ev.dst)
        if kind is EventKind.FILTERED:
            p.filtered += 1
        elif kind is EventKind.DISCARDED_DUP:
            p.discarded_dup += 1
        elif kind is EventKind.DELIVERED:
            p.delivered += 1
            p.latencies.append(ev.latency)
            if p._seqs:
                p.drops += seq_gap(p._seqs[-1], ev.seq)
                vl = self.topology.vls.get(ev.vl_id) if self.topology else None
                if vl is not None and ev.time - p._last_rx > 254 * vl.bag_ns / self.speed:
                    self.warnings.append(
                        f"VL {ev.vl_id} -> ES{ev.dst}: reception gap at {ev.time} ns exceeds 254 periods; "
                        f"loss count may be aliased"
                    )
            p._seqs.append(ev.seq)
            p._last_rx = ev.time
            ch = self.topology.channels.get((ev.vl_id, ev.dst)) if self.topology else None
            if ch is not None:
                verdict = check_latency(ev.time - ev.latency, ev.time, ch)
                p.latency_classes[verdict.cls] += 1
                if verdict.cls is LatencyClass.ABOVE_WCTT:
                    self.flagged.append((ev, "above_wctt"))

    def report(self) -> MonitorReport:
        for p in self.paths.values():
            tally = self._vl_tallies.get(p.vl_id, Counter())
            p.emitted = tally["emitted"]
            p.rejected = tally["rejected"]
            p.skipped_periods = tally["skipped"]
            p.jitter_classes = Counter({c: tally[c] for c in JitterClass if tally[c]})
        paths = [self.paths[k] for k in sorted(self.paths)]
        return MonitorReport(paths, list(self.flagged), list(self.warnings))


def trim_window(trace: TraceLog, percent, duration_ns: int | None = None) -> tuple[int, int]:
    """Analysis window dropping ``percent`` of the run at each end.

    The run spans [0, duration_ns]; without an explicit duration the last
    event time is used.
    """
    span = duration_ns if duration_ns is not None else max((e.time for e in trace), default=0)
    cut = math.ceil(Fraction(percent) * span / 100)
    return cut, span - cut + 1 if cut else span + 1


def monitor_report(
    trace: TraceLog | Iterable[TraceEvent],
    topology: TopologySpec | None = None,
    speed=1,
    trim=0,
    duration_ns: int | None = None,
) -> MonitorReport:
    events = trace if isinstance(trace, TraceLog) else TraceLog(list(trace))
    window = trim_window(events, trim, duration_ns) if trim else None
    fold = MonitorFold(topology, speed, window)
    for ev in events:
        fold.feed(ev)
    return fold.report()
