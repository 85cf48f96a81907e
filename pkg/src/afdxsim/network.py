"""Topology description and the three frame-transport abstractions.

A :class:`TopologySpec` carries everything the engine needs for any of the
three model levels: the VLs, timed-channel bounds per VL path, and the
switch fabric (flow tables, port wiring, per-VL ingress ports) used by the
switched model.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np

from .core import (
    DEFAULT_CONSTANTS,
    NS_PER_US,
    NetworkConstants,
    VirtualLinkSpec,
    encode_dest_mac,
    exact,
    format_decimal,
    format_vl_field,
    parse_vl_field,
    resolve_jitter,
    transmission_time_ns,
    us_to_ns,
    validate_vl,
)

DEFAULT_OUTPUT_PROCESSING_NS = 100  # 0.1 us


class OccupancyError(RuntimeError):
    """A timed channel received a frame while still delaying another one."""


class TopologyError(ValueError):
    pass


@dataclass(frozen=True)
class TimedChannelSpec:
    source: int
    destination: int
    bctt_ns: int
    wctt_ns: int
    name: str = ""

    def __post_init__(self):
        if not 0 < self.bctt_ns <= self.wctt_ns:
            raise TopologyError(f"channel {self.label}: need 0 < bctt <= wctt")

    @classmethod
    def from_us(cls, source, destination, bctt_us, wctt_us, name=""):
        return cls(source, destination, us_to_ns(bctt_us), us_to_ns(wctt_us), name)

    @property
    def label(self) -> str:
        return self.name or f"{self.source}->{self.destination}"


@dataclass(frozen=True)
class FlowEntry:
    in_port: int
    match_dest_mac: bytes
    out_ports: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "out_ports", tuple(self.out_ports))
        if not self.out_ports:
            raise TopologyError("flow entry needs at least one output port")
        if len(set(self.out_ports)) != len(self.out_ports):
            raise TopologyError("flow entry output ports must be distinct")


@dataclass(frozen=True)
class Peer:
    """What sits at the far end of a switch port."""

    kind: str  # "es" or "switch"
    node: int | str
    port: int | None = None


@dataclass(frozen=True)
class SwitchSpec:
    switch_id: str
    flow_table: tuple[FlowEntry, ...] = ()
    ports: Mapping[int, Peer] = field(default_factory=dict)
    tech_latency_ns: tuple[int, int] = (0, 0)
    output_processing_ns: tuple[int, int] = (0, DEFAULT_OUTPUT_PROCESSING_NS)
    policed_vls: frozenset[int] = frozenset()
    # per-VL technological latency overriding ``tech_latency_ns``
    vl_latency_ns: Mapping[int, tuple[int, int]] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "flow_table", tuple(self.flow_table))
        object.__setattr__(self, "policed_vls", frozenset(self.policed_vls))
        keys = [(e.in_port, e.match_dest_mac) for e in self.flow_table]
        if len(set(keys)) != len(keys):
            raise TopologyError(f"switch {self.switch_id}: duplicate (in_port, match) flow entries")
        for lo, hi in [self.tech_latency_ns, self.output_processing_ns, *self.vl_latency_ns.values()]:
            if not 0 <= lo <= hi:
                raise TopologyError(f"switch {self.switch_id}: bad latency interval [{lo}, {hi}]")
        object.__setattr__(self, "_table", {k: e.out_ports for k, e in zip(keys, self.flow_table)})

    def latency_for(self, vl_id: int) -> tuple[int, int]:
        return self.vl_latency_ns.get(vl_id, self.tech_latency_ns)


@dataclass(frozen=True)
class TopologySpec:
    vls: Mapping[int, VirtualLinkSpec]
    end_systems: Mapping[int, str] = field(default_factory=dict)
    channels: Mapping[tuple[int, int], TimedChannelSpec] = field(default_factory=dict)
    switches: Mapping[str, SwitchSpec] = field(default_factory=dict)
    ingress: Mapping[int, tuple[str, int]] = field(default_factory=dict)
    consts: NetworkConstants = DEFAULT_CONSTANTS

    def __post_init__(self):
        resolved = resolve_jitter(list(self.vls.values()), self.consts)
        object.__setattr__(self, "vls", {vl.vl_id: vl for vl in sorted(resolved, key=lambda v: v.vl_id)})
        if not self.end_systems:
            es = set()
            for vl in self.vls.values():
                es.add(vl.source)
                es.update(vl.destinations)
            object.__setattr__(self, "end_systems", {e: f"ES{e}" for e in sorted(es)})

    def paths(self) -> list[tuple[int, int, int]]:
        """Every (vl_id, source, destination) path, ordered."""
        return [(vl.vl_id, vl.source, d) for vl in self.vls.values() for d in vl.destinations]

    def channel(self, vl_id: int, dst: int) -> TimedChannelSpec:
        try:
            return self.channels[(vl_id, dst)]
        except KeyError:
            raise TopologyError(f"VL {vl_id}: no channel bounds for destination ES{dst}") from None

    def validate(self) -> list[tuple[int, str]]:
        """All VL violations plus structural problems, as (vl_id, message)."""
        problems = []
        for vl in self.vls.values():
            problems += [(vl.vl_id, str(v)) for v in validate_vl(vl).violations]
            for d in vl.destinations:
                ch = self.channels.get((vl.vl_id, d))
                if ch is not None and ch.wctt_ns >= vl.bag_ns:
                    problems.append((vl.vl_id, f"channel {ch.label}: wctt not below bag"))
        return problems

    def missing_bounds(self) -> list[tuple[int, int]]:
        return [(v, d) for v, _, d in self.paths() if (v, d) not in self.channels]


# -- timed channel / direct VL ---------------------------------------------------


def sample_interval(rng: np.random.Generator, lo: int, hi: int) -> int:
    """Uniform integer draw from the closed interval [lo, hi]."""
    if lo == hi:
        return lo
    return int(rng.integers(lo, hi, endpoint=True))


class TimedChannel:
    """A single-frame delay line with traversal time in [bctt, wctt]."""

    def __init__(self, spec: TimedChannelSpec):
        self.spec = spec
        self.busy_until: int | None = None
        self.entered_at: int | None = None

    def enter(self, t: int, rng: np.random.Generator) -> int:
        if self.busy_until is not None and t < self.busy_until:
            raise OccupancyError(
                f"channel {self.spec.label}: frame entered at {t} ns while the frame "
                f"that entered at {self.entered_at} ns is in transit until {self.busy_until} ns"
            )
        delay = channel_delay(self.spec, rng)
        self.entered_at, self.busy_until = t, t + delay
        return self.busy_until


def channel_delay(ch: TimedChannelSpec, rng: np.random.Generator) -> int:
    return sample_interval(rng, ch.bctt_ns, ch.wctt_ns)


def period_start(i: int, bag_ns: int, speed: Fraction | int = 1) -> int:
    """Start of period ``i`` in integer ns (rounded up when bag/speed is fractional)."""
    return math.ceil(i * exact(bag_ns) / exact(speed))


def tx_pipeline(vl: VirtualLinkSpec, i: int, speed, rng: np.random.Generator) -> int:
    """Emission time of the frame for period ``i`` with uniform jitter in [0, j_max]."""
    if i < 0:
        raise ValueError("period index must be non-negative")
    if exact(speed) <= 0:
        raise ValueError("speed must be positive")
    return period_start(i, vl.bag_ns, speed) + sample_interval(rng, 0, vl.j_max_ns or 0)


def rx_pipeline(ch: TimedChannelSpec, arrival: int, rng: np.random.Generator) -> int:
    return arrival + channel_delay(ch, rng)


# -- switched VL ---------------------------------------------------------------


def route(sw: SwitchSpec, in_port: int, dest_mac: bytes) -> tuple[int, ...] | None:
    """Output ports of the matching flow entry, or None when the frame is filtered."""
    return sw._table.get((in_port, dest_mac))


def switched_hop(
    sw: SwitchSpec, vl_id: int, size: int, t: int, rng: np.random.Generator,
    consts: NetworkConstants = DEFAULT_CONSTANTS,
) -> int:
    """Time at which one copy of a frame has been forwarded out of ``sw``."""
    lo, hi = sw.latency_for(vl_id)
    return (
        t
        + sample_interval(rng, lo, hi)
        + sample_interval(rng, *sw.output_processing_ns)
        + transmission_time_ns(size, consts)
    )


def reachable_end_systems(topo: TopologySpec) -> dict[tuple[str, int], frozenset[int]]:
    """End systems physically reachable through each switch output port."""
    memo: dict[tuple[str, int], frozenset[int]] = {}

    def walk(sw_id: str, port: int, seen: frozenset) -> frozenset[int]:
        peer = topo.switches[sw_id].ports.get(port)
        if peer is None:
            return frozenset()
        if peer.kind == "es":
            return frozenset((peer.node,))
        if peer.node in seen:
            return frozenset()
        nxt = topo.switches[peer.node]
        out: frozenset[int] = frozenset()
        for p in nxt.ports:
            if p != peer.port:
                out |= walk(peer.node, p, seen | {peer.node})
        return out

    for sw_id, sw in topo.switches.items():
        for port in sw.ports:
            memo[(sw_id, port)] = walk(sw_id, port, frozenset((sw_id,)))
    return memo


def vl_hop_paths(topo: TopologySpec, vl_id: int) -> dict[int, list[str]]:
    """Switches traversed from the VL's ingress to each destination, per flow tables."""
    vl = topo.vls[vl_id]
    if vl_id not in topo.ingress:
        raise TopologyError(f"VL {vl_id}: no ingress port")
    mac = encode_dest_mac(vl_id)
    paths: dict[int, list[str]] = {}
    stack = [(*topo.ingress[vl_id], [])]
    while stack:
        sw_id, port, trail = stack.pop()
        if sw_id in trail:
            raise TopologyError(f"VL {vl_id}: forwarding loop through {sw_id}")
        sw = topo.switches[sw_id]
        outs = route(sw, port, mac) or ()
        for out in outs:
            peer = sw.ports.get(out)
            if peer is None:
                continue
            if peer.kind == "es":
                if peer.node in vl.destinations:
                    paths[peer.node] = trail + [sw_id]
            else:
                stack.append((peer.node, peer.port, trail + [sw_id]))
    return paths


def calibrate(topo: TopologySpec) -> TopologySpec:
    """Per-switch, per-VL tech latency so end-to-end latency stays in [bctt, wctt].

    Latencies already configured for a (switch, VL) pair are kept.

    The budget left after the per-hop transmission times (and the worst
    output processing time on the upper side) is split evenly across hops.
    Intervals are intersected across destinations sharing a switch.
    """
    overrides: dict[str, dict[int, tuple[int, int]]] = {s: dict(sw.vl_latency_ns) for s, sw in topo.switches.items()}
    for vl in topo.vls.values():
        tx = transmission_time_ns(vl.frame_size, topo.consts)
        per_switch: dict[str, tuple[int, int]] = {}
        for dst, hops in vl_hop_paths(topo, vl.vl_id).items():
            ch = topo.channel(vl.vl_id, dst)
            h = len(hops)
            p_max = sum(topo.switches[s].output_processing_ns[1] for s in hops)
            lo = math.ceil(Fraction(ch.bctt_ns - h * tx, h))
            hi = math.floor(Fraction(ch.wctt_ns - h * tx - p_max, h))
            for s in hops:
                plo, phi = per_switch.get(s, (0, hi))
                per_switch[s] = (max(plo, lo, 0), min(phi, hi))
        for s, (lo, hi) in per_switch.items():
            if vl.vl_id in topo.switches[s].vl_latency_ns:
                continue
            if lo > hi:
                raise TopologyError(f"VL {vl.vl_id}: channel bounds too tight to calibrate switch {s}")
            overrides[s][vl.vl_id] = (lo, hi)
    switches = {s: replace(sw, vl_latency_ns=overrides[s]) for s, sw in topo.switches.items()}
    return replace(topo, switches=switches)


def single_switch_fabric(
    vls: Iterable[VirtualLinkSpec], switch_id: str = "S1", police: bool = True
) -> tuple[dict[str, SwitchSpec], dict[int, tuple[str, int]]]:
    """Many-to-one mapping: every VL crosses one shared switch.

    Each VL gets its own ingress port followed by one egress port per
    destination, so VL1 of the FMS network maps to in_port 1, actions 2,3.
    """
    ports: dict[int, Peer] = {}
    flows = []
    ingress = {}
    nxt = 1
    vls = sorted(vls, key=lambda v: v.vl_id)
    for vl in vls:
        in_port = nxt
        ports[in_port] = Peer("es", vl.source)
        outs = []
        for d in vl.destinations:
            nxt += 1
            ports[nxt] = Peer("es", d)
            outs.append(nxt)
        nxt += 1
        flows.append(FlowEntry(in_port, encode_dest_mac(vl.vl_id), tuple(outs)))
        ingress[vl.vl_id] = (switch_id, in_port)
    sw = SwitchSpec(
        switch_id, tuple(flows), ports,
        policed_vls=frozenset(v.vl_id for v in vls) if police else frozenset(),
    )
    return {switch_id: sw}, ingress


# -- redundancy ----------------------------------------------------------------


class RedundancyState:
    """Per-receiver duplicate filter across the two redundant networks."""

    def __init__(self, window_ns: Mapping[int, int]):
        self.window_ns = dict(window_ns)
        self.last: dict[int, tuple[int, int]] = {}

    def accept(self, vl_id: int, seq_no: int, t: int) -> bool:
        prev = self.last.get(vl_id)
        if prev is not None and prev[0] == seq_no and t - prev[1] <= self.window_ns[vl_id]:
            return False
        self.last[vl_id] = (seq_no, t)
        return True


def redundancy_accept(state: RedundancyState, frame, t: int) -> bool:
    return state.accept(frame.vl_id, frame.seq_no, t)


# -- JSON ------------------------------------------------------------------------


def _us(ns: int) -> int | float:
    v = Fraction(ns, NS_PER_US)
    return int(v) if v.denominator == 1 else float(format_decimal(v))


def _interval(pair) -> tuple[int, int]:
    lo, hi = pair
    return us_to_ns(lo), us_to_ns(hi)


def flow_to_json(e: FlowEntry) -> dict:
    from .core import decode_dest_mac

    return {"in_port": e.in_port, "vl_id": format_vl_field(decode_dest_mac(e.match_dest_mac)),
            "actions": list(e.out_ports)}


def flow_from_json(d: Mapping) -> FlowEntry:
    actions = d["actions"]
    if isinstance(actions, str):
        actions = [int(a) for a in actions.split(",")]
    return FlowEntry(int(d["in_port"]), encode_dest_mac(parse_vl_field(d["vl_id"])), tuple(actions))


def topology_to_dict(topo: TopologySpec) -> dict:
    vls = []
    for vl in topo.vls.values():
        vls.append({
            "vl_id": vl.vl_id, "source": vl.source, "destinations": list(vl.destinations),
            "bag_ms": vl.bag_ms, "s_max": format_decimal(vl.s_max),
            "j_max_us": format_decimal(vl.j_max_us),
        })
    channels = [
        {"vl_id": v, "destination": d, "source": ch.source, "name": ch.name,
         "bctt_us": _us(ch.bctt_ns), "wctt_us": _us(ch.wctt_ns)}
        for (v, d), ch in sorted(topo.channels.items())
    ]
    switches = []
    for sw in topo.switches.values():
        ports = {}
        for p, peer in sorted(sw.ports.items()):
            ports[str(p)] = {"es": peer.node} if peer.kind == "es" else {"switch": peer.node, "port": peer.port}
        switches.append({
            "id": sw.switch_id,
            "tech_latency_us": [_us(x) for x in sw.tech_latency_ns],
            "output_processing_us": [_us(x) for x in sw.output_processing_ns],
            "policed_vls": sorted(sw.policed_vls),
            "ports": ports,
            "flows": [flow_to_json(e) for e in sw.flow_table],
            "vl_latency_us": {str(v): [_us(x) for x in iv] for v, iv in sorted(sw.vl_latency_ns.items())},
        })
    return {
        "end_systems": {str(k): v for k, v in sorted(topo.end_systems.items())},
        "vls": vls,
        "channels": channels,
        "switches": switches,
        "ingress": [{"vl_id": v, "switch": s, "port": p} for v, (s, p) in sorted(topo.ingress.items())],
    }


def topology_from_dict(doc: Mapping) -> TopologySpec:
    vls = {}
    for d in doc["vls"]:
        j = d.get("j_max_us")
        vl = VirtualLinkSpec(
            int(d["vl_id"]), int(d["source"]), tuple(int(x) for x in d["destinations"]),
            int(d["bag_ms"]), exact(d["s_max"]), None if j is None else us_to_ns(exact(j)),
        )
        vls[vl.vl_id] = vl
    channels = {}
    for c in doc.get("channels", []):
        v, dst = int(c["vl_id"]), int(c["destination"])
        src = int(c.get("source", vls[v].source if v in vls else 0))
        channels[(v, dst)] = TimedChannelSpec.from_us(src, dst, exact(c["bctt_us"]), exact(c["wctt_us"]), c.get("name", ""))
    switches = {}
    for s in doc.get("switches", []):
        ports = {}
        for p, peer in s.get("ports", {}).items():
            ports[int(p)] = Peer("es", int(peer["es"])) if "es" in peer else Peer("switch", peer["switch"], int(peer["port"]))
        kwargs = {}
        if "tech_latency_us" in s:
            kwargs["tech_latency_ns"] = _interval(s["tech_latency_us"])
        if "output_processing_us" in s:
            kwargs["output_processing_ns"] = _interval(s["output_processing_us"])
        switches[s["id"]] = SwitchSpec(
            s["id"], tuple(flow_from_json(f) for f in s.get("flows", [])), ports,
            policed_vls=frozenset(int(v) for v in s.get("policed_vls", [])),
            vl_latency_ns={int(v): _interval(iv) for v, iv in s.get("vl_latency_us", {}).items()},
            **kwargs,
        )
    ingress = {int(i["vl_id"]): (i["switch"], int(i["port"])) for i in doc.get("ingress", [])}
    es = {int(k): v for k, v in doc.get("end_systems", {}).items()}
    return TopologySpec(vls, es, channels, switches, ingress)


def dump_topology(topo: TopologySpec) -> str:
    return json.dumps(topology_to_dict(topo), indent=2) + "\n"


def load_topology(text: str) -> TopologySpec:
    return topology_from_dict(json.loads(text))
