"""Trace records and the TraceLog CSV format."""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple

HEADER = ("time_ns", "event", "vl_id", "src", "dst", "seq", "latency_ns")


class EventKind(str, enum.Enum):
    EMITTED = "emitted"
    ACCEPTED = "accepted"
    REJECTED = "rejected"
    FILTERED = "filtered"
    DELIVERED = "delivered"
    DISCARDED_DUP = "discarded_dup"
    SKIPPED_PERIOD = "skipped_period"

    def __str__(self):
        return self.value


class TraceEvent(NamedTuple):
    time: int
    event: EventKind
    vl_id: int
    src: int
    dst: int | None
    seq: int
    latency: int | None = None

    def row(self) -> list[str]:
        return [
            str(self.time), self.event.value, str(self.vl_id), str(self.src),
            "" if self.dst is None else str(self.dst), str(self.seq),
            "" if self.latency is None else str(self.latency),
        ]


class TraceFormatError(ValueError):
    def __init__(self, problems: list[tuple[int, str]]):
        self.problems = problems
        super().__init__("; ".join(f"line {n}: {msg}" for n, msg in problems))


@dataclass
class TraceLog:
    events: list[TraceEvent]

    def __iter__(self) -> Iterator[TraceEvent]:
        return iter(self.events)

    def __len__(self):
        return len(self.events)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(HEADER)
        w.writerows(e.row() for e in self.events)
        return buf.getvalue()

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv())

    @classmethod
    def from_csv(cls, text: str) -> "TraceLog":
        reader = csv.reader(io.StringIO(text))
        try:
            header = next(reader)
        except StopIteration:
            raise TraceFormatError([(1, "empty trace file")]) from None
        if tuple(header) != HEADER:
            raise TraceFormatError([(1, f"bad header {','.join(header)!r}")])
        events, problems = [], []
        for lineno, row in enumerate(reader, start=2):
            try:
                events.append(parse_row(row))
            except (ValueError, IndexError) as exc:
                problems.append((lineno, str(exc)))
        if problems:
            raise TraceFormatError(problems)
        return cls(events)

    @classmethod
    def read(cls, path) -> "TraceLog":
        with open(path, encoding="utf-8") as fh:
            return cls.from_csv(fh.read())


def parse_row(row: list[str]) -> TraceEvent:
    if len(row) != len(HEADER):
        raise ValueError(f"expected {len(HEADER)} fields, got {len(row)}")
    time, event, vl, src, dst, seq, lat = row
    kind = EventKind(event)
    latency = int(lat) if lat else None
    if (kind is EventKind.DELIVERED) != (latency is not None):
        raise ValueError("latency must be present exactly on delivered rows")
    seq_no = int(seq)
    if not 0 <= seq_no <= 255:
        raise ValueError(f"sequence number {seq_no} outside 0..255")
    return TraceEvent(int(time), kind, int(vl), int(src), int(dst) if dst else None, seq_no, latency)


def flagged_csv(rows: Iterable[tuple[TraceEvent, str]]) -> str:
    """TraceLog schema plus a trailing ``reason`` column."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow((*HEADER, "reason"))
    for event, reason in rows:
        w.writerow((*event.row(), reason))
    return buf.getvalue()
