"""Benchmark topologies: random single-switch networks, CSV templates, FMS."""

from __future__ import annotations

import csv
import io
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .core import (
    DEFAULT_CONSTANTS,
    LEGAL_BAGS_MS,
    MAX_FRAME_BYTES,
    MIN_FRAME_BYTES,
    NS_PER_US,
    VirtualLinkSpec,
    exact,
    format_decimal,
    transmission_time_ns,
    validate_vl,
)
from .network import TimedChannelSpec, TopologySpec, single_switch_fabric

CSV_HEADER = "vlid,src,dst,bag,size"
MAX_VL_ID = 0xFFFF


class CsvFormatError(ValueError):
    def __init__(self, row: int, message: str):
        self.row = row
        super().__init__(f"row {row}: {message}")


@dataclass(frozen=True)
class CsvRow:
    vlid: int
    src: int
    dst: tuple[int, ...]
    bag: int
    size: Fraction

    def to_vl(self) -> VirtualLinkSpec:
        return VirtualLinkSpec(self.vlid, self.src, self.dst, self.bag, self.size)


@dataclass(frozen=True)
class CsvTopology:
    rows: tuple[CsvRow, ...]
    # CSV line number of each row (header is line 1)
    lines: tuple[int, ...] = field(default=(), compare=False)

    @property
    def vls(self) -> list[VirtualLinkSpec]:
        return [r.to_vl() for r in self.rows]

    def end_systems(self) -> set[int]:
        out = set()
        for r in self.rows:
            out.add(r.src)
            out.update(r.dst)
        return out


def parse_csv(text: str, strict: bool = True) -> CsvTopology:
    """Parse ``vlid,src,dst,bag,size``.

    With ``strict=False`` only syntax is checked; AFDX range violations are
    left for :func:`~afdxsim.core.validate_vl` to report.
    """
    lines = text.splitlines()
    if not lines or lines[0].strip() != CSV_HEADER:
        raise CsvFormatError(1, f"header must be exactly {CSV_HEADER!r}")
    rows, numbers, seen = [], [], set()
    for lineno, fields in enumerate(csv.reader(lines[1:]), start=2):
        if not fields:
            continue
        if len(fields) != 5:
            raise CsvFormatError(lineno, f"expected 5 fields, got {len(fields)}")
        try:
            vlid, src, bag = int(fields[0]), int(fields[1]), int(fields[3])
            dst = tuple(int(d) for d in fields[2].split(","))
            size = Fraction(fields[4].strip())
        except ValueError as exc:
            raise CsvFormatError(lineno, str(exc)) from None
        if vlid in seen:
            raise CsvFormatError(lineno, f"duplicate vlid {vlid}")
        seen.add(vlid)
        row = CsvRow(vlid, src, dst, bag, size)
        if strict:
            violations = validate_vl(row.to_vl()).violations
            if violations:
                raise CsvFormatError(lineno, "; ".join(str(v) for v in violations))
        rows.append(row)
        numbers.append(lineno)
    return CsvTopology(tuple(rows), tuple(numbers))


def emit_csv(topology: CsvTopology) -> str:
    out = [CSV_HEADER]
    for r in topology.rows:
        dst = ",".join(str(d) for d in r.dst)
        out.append(f'{r.vlid},{r.src},"{dst}",{r.bag},{format_decimal(r.size)}')
    return "\n".join(out) + "\n"


def csv_from_topology(topo: TopologySpec) -> CsvTopology:
    return CsvTopology(tuple(
        CsvRow(vl.vl_id, vl.source, vl.destinations, vl.bag_ms, vl.s_max) for vl in topo.vls.values()
    ))


def to_topology(
    template: CsvTopology,
    channels: dict[tuple[int, int], TimedChannelSpec] | None = None,
    names: dict[int, str] | None = None,
    police: bool = True,
) -> TopologySpec:
    """Topology with the many-to-one single-switch fabric."""
    vls = {vl.vl_id: vl for vl in template.vls}
    switches, ingress = single_switch_fabric(vls.values(), police=police)
    return TopologySpec(vls, names or {}, channels or {}, switches, ingress)


# -- random generator --------------------------------------------------------


@dataclass(frozen=True)
class RandomGenSpec:
    n_vls: int
    seed: int = 0
    bag_pool: tuple[int, ...] = LEGAL_BAGS_MS
    size_range: tuple[int, int] = (MIN_FRAME_BYTES, MAX_FRAME_BYTES)
    # synthetic channel bounds: [hop wire time, hop wire time + margin]
    margin_us: Fraction = Fraction(100)

    def __post_init__(self):
        if self.n_vls < 1:
            raise ValueError("n_vls must be at least 1")
        if self.n_vls > MAX_VL_ID:
            raise ValueError("n_vls exceeds the 16-bit VL identifier space")
        if not set(self.bag_pool) <= set(LEGAL_BAGS_MS):
            raise ValueError("bag pool must hold AFDX BAG values")
        lo, hi = self.size_range
        if not MIN_FRAME_BYTES <= lo <= hi <= MAX_FRAME_BYTES:
            raise ValueError("size range must lie within [64, 1518]")


def generate_random(spec: RandomGenSpec) -> TopologySpec:
    """Point-to-point VLs over one shared switch; VL k runs ES 2k-1 -> ES 2k."""
    rng = random.Random(spec.seed)
    vls, channels = {}, {}
    margin_ns = int(exact(spec.margin_us) * NS_PER_US)
    for k in range(1, spec.n_vls + 1):
        bag = rng.choice(spec.bag_pool)
        size = rng.randint(*spec.size_range)
        src, dst = 2 * k - 1, 2 * k
        vls[k] = VirtualLinkSpec(k, src, (dst,), bag, Fraction(size))
        tx = transmission_time_ns(size, DEFAULT_CONSTANTS)
        channels[(k, dst)] = TimedChannelSpec(src, dst, tx, tx + margin_ns, f"C{k}")
    switches, ingress = single_switch_fabric(vls.values())
    return TopologySpec(vls, {}, channels, switches, ingress)


# -- templates -----------------------------------------------------------------


def replicate_csv(template: CsvTopology, k: int) -> CsvTopology:
    """``k`` disjoint copies; copy c offsets VL ids and ES ids by c times the template maxima."""
    if k < 1:
        raise ValueError("copies must be at least 1")
    vl_span = max(r.vlid for r in template.rows)
    es_span = max(template.end_systems())
    if k * vl_span > MAX_VL_ID:
        raise ValueError(f"{k} copies need VL ids up to {k * vl_span}, beyond {MAX_VL_ID}")
    rows = []
    for c in range(k):
        dv, de = c * vl_span, c * es_span
        rows += [CsvRow(r.vlid + dv, r.src + de, tuple(d + de for d in r.dst), r.bag, r.size) for r in template.rows]
    return CsvTopology(tuple(rows))


def replicate(
    template: CsvTopology,
    k: int,
    channels: dict[tuple[int, int], TimedChannelSpec] | None = None,
    names: dict[int, str] | None = None,
) -> TopologySpec:
    """Replicated template as a topology, carrying channel bounds and names along."""
    copies = replicate_csv(template, k)
    vl_span = max(r.vlid for r in template.rows)
    es_span = max(template.end_systems())
    new_channels, new_names = {}, {}
    for c in range(k):
        dv, de = c * vl_span, c * es_span
        for (v, d), ch in (channels or {}).items():
            name = ch.name if c == 0 else f"{ch.name}#{c + 1}"
            new_channels[(v + dv, d + de)] = TimedChannelSpec(ch.source + de, ch.destination + de, ch.bctt_ns, ch.wctt_ns, name)
        for es, name in (names or {}).items():
            new_names[es + de] = name if c == 0 else f"{name}#{c + 1}"
    return to_topology(copies, new_channels, new_names)


# -- the Flight Management System use case -------------------------------------

FMS_CSV = """vlid,src,dst,bag,size
1,1,"3,4",32,75
2,2,"3,4",32,75
3,3,"1",8,625
4,3,"7",16,125
5,4,"2",8,625
6,4,"7",16,125
7,7,"3",64,500
8,7,"4",64,500
9,8,"5",32,64
10,9,"6",32,64
11,5,"3,4",32,87.5
12,6,"3,4",32,87.5
"""

# end system id -> partitions it hosts
FMS_NAMES = {
    1: "KU1/MFD1", 2: "KU2/MFD2", 3: "FM1", 4: "FM2", 5: "ADIRU1",
    6: "ADIRU2", 7: "NDB", 8: "RDC1", 9: "RDC2",
}

# (vl_id, destination ES) -> (channel, BCTT us, WCTT us)
FMS_CHANNEL_BOUNDS = {
    (1, 3): ("C1", 298, 444), (1, 4): ("C1'", 298, 444),
    (2, 3): ("C2", 298, 444), (2, 4): ("C2'", 298, 444),
    (3, 1): ("C3", 310, 490), (4, 7): ("C4", 310, 450),
    (5, 2): ("C5", 310, 490), (6, 7): ("C6", 310, 450),
    (7, 3): ("C7", 400, 508), (8, 4): ("C8", 400, 508),
    (9, 5): ("C9", 150, 156), (10, 6): ("C10", 150, 156),
    (11, 3): ("C11", 452, 584), (11, 4): ("C11'", 452, 584),
    (12, 4): ("C12", 452, 584), (12, 3): ("C12'", 452, 584),
}


def fms_channels() -> dict[tuple[int, int], TimedChannelSpec]:
    template = parse_csv(FMS_CSV)
    src = {r.vlid: r.src for r in template.rows}
    return {
        (v, d): TimedChannelSpec.from_us(src[v], d, lo, hi, name)
        for (v, d), (name, lo, hi) in FMS_CHANNEL_BOUNDS.items()
    }


def fms_topology(copies: int = 1) -> TopologySpec:
    template = parse_csv(FMS_CSV)
    return replicate(template, copies, fms_channels(), FMS_NAMES)
