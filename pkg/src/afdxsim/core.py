"""AFDX domain types and closed-form formulas.

Durations are integer nanoseconds internally. Formula results that the
standard states in microseconds (jitter bound, transmission time) are
returned as exact ``Fraction`` values so that e.g. 47.6 us compares equal
without tolerance. Frame sizes are exact rationals as well: the FMS use
case configures 87.5-byte frames.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence, Union

Number = Union[int, float, str, Fraction]

LEGAL_BAGS_MS = (1, 2, 4, 8, 16, 32, 64, 128)
MIN_FRAME_BYTES = 64
MAX_FRAME_BYTES = 1518
DEFAULT_PAYLOAD_BYTES = 17
MAC_PREFIX = bytes((0x03, 0x00, 0x00, 0x00))

NS_PER_US = 1000
NS_PER_MS = 1_000_000


def exact(value: Number) -> Fraction:
    """Convert a user-supplied number to an exact fraction.

    Floats go through their shortest repr so ``87.5`` and ``0.1`` are
    read the way they were written rather than as binary approximations.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


def us_to_ns(value: Number) -> int:
    """Exact microseconds to integer nanoseconds; rejects sub-ns residue."""
    ns = exact(value) * NS_PER_US
    if ns.denominator != 1:
        raise ValueError(f"{value} us is not a whole number of nanoseconds")
    return int(ns)


def ms_to_ns(value: Number) -> int:
    ns = exact(value) * NS_PER_MS
    if ns.denominator != 1:
        raise ValueError(f"{value} ms is not a whole number of nanoseconds")
    return int(ns)


def format_decimal(value: Fraction, places: int | None = None) -> str:
    """Render an exact value as a plain decimal string.

    With ``places=None`` the value must have a terminating decimal
    expansion and is rendered without trailing zeros (``75``, ``87.5``).
    """
    value = exact(value)
    if places is not None:
        scaled = round(value * 10**places)
        sign = "-" if scaled < 0 else ""
        whole, frac = divmod(abs(scaled), 10**places)
        return f"{sign}{whole}.{frac:0{places}d}" if places else f"{sign}{whole}"
    if value.denominator == 1:
        return str(value.numerator)
    for digits in range(1, 19):
        scaled = value * 10**digits
        if scaled.denominator == 1:
            return format_decimal(value, digits)
    raise ValueError(f"{value} has no short decimal form")


@dataclass(frozen=True)
class NetworkConstants:
    nbw: Fraction = Fraction(100)  # bits per microsecond
    wire_overhead: int = 20  # bytes
    tech_jitter_floor_us: Fraction = Fraction(40)
    jitter_hard_limit_us: Fraction = Fraction(500)

    def __post_init__(self):
        for name in ("nbw", "tech_jitter_floor_us", "jitter_hard_limit_us"):
            object.__setattr__(self, name, exact(getattr(self, name)))
        if min(self.nbw, self.wire_overhead, self.tech_jitter_floor_us, self.jitter_hard_limit_us) <= 0:
            raise ValueError("network constants must be strictly positive")


DEFAULT_CONSTANTS = NetworkConstants()


@dataclass(frozen=True)
class VirtualLinkSpec:
    """Contract of one virtual link.

    ``j_max_ns`` may be ``None``, meaning "derive from the jitter bound of
    the source end system" (see :func:`max_jitter_for_es`); topologies
    resolve it when they are built.
    """

    vl_id: int
    source: int
    destinations: tuple[int, ...]
    bag_ms: int
    s_max: Fraction
    j_max_ns: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "destinations", tuple(self.destinations))
        object.__setattr__(self, "s_max", exact(self.s_max))

    @property
    def bag_ns(self) -> int:
        return self.bag_ms * NS_PER_MS

    @property
    def j_max_us(self) -> Fraction | None:
        return None if self.j_max_ns is None else Fraction(self.j_max_ns, NS_PER_US)

    @property
    def frame_size(self) -> int:
        """Size of concrete frames on this VL (s_max rounded up to bytes)."""
        return math.ceil(self.s_max)

    @property
    def dest_mac(self) -> bytes:
        return encode_dest_mac(self.vl_id)


@dataclass(frozen=True)
class Frame:
    vl_id: int
    seq_no: int
    emit_time: int  # ns, carried in the payload
    size: int
    payload_len: int = DEFAULT_PAYLOAD_BYTES

    def __post_init__(self):
        if not 0 <= self.seq_no <= 255:
            raise ValueError(f"sequence number {self.seq_no} outside 0..255")
        if self.size <= 0:
            raise ValueError("frame size must be positive")

    @property
    def dest_mac(self) -> bytes:
        return encode_dest_mac(self.vl_id)


@dataclass(frozen=True)
class Violation:
    field: str
    message: str

    def __str__(self):
        return f"{self.field}: {self.message}"


@dataclass(frozen=True)
class ValidationResult:
    violations: tuple[Violation, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


def validate_vl(spec: VirtualLinkSpec) -> ValidationResult:
    """Check every VirtualLinkSpec invariant and report all violations."""
    found = []
    if not 0 <= spec.vl_id <= 0xFFFF:
        found.append(Violation("vl_id", "vl_id does not fit 16 bits"))
    if spec.bag_ms not in LEGAL_BAGS_MS:
        found.append(Violation("bag", "bag not a power-of-two in 1..128"))
    if not MIN_FRAME_BYTES <= spec.s_max <= MAX_FRAME_BYTES:
        found.append(Violation("s_max", f"s_max out of [{MIN_FRAME_BYTES},{MAX_FRAME_BYTES}]"))
    if not spec.destinations:
        found.append(Violation("destinations", "destinations empty"))
    if spec.source in spec.destinations:
        found.append(Violation("destinations", "source listed among destinations"))
    if len(set(spec.destinations)) != len(spec.destinations):
        found.append(Violation("destinations", "duplicate destination"))
    if spec.j_max_ns is not None:
        limit = us_to_ns(DEFAULT_CONSTANTS.jitter_hard_limit_us)
        if not 0 < spec.j_max_ns <= limit:
            found.append(Violation("j_max", "j_max out of (0, 500] us"))
        if spec.j_max_ns >= spec.bag_ns:
            found.append(Violation("j_max", "j_max not below bag"))
    return ValidationResult(tuple(found))


def transmission_time(size: Number, consts: NetworkConstants = DEFAULT_CONSTANTS) -> Fraction:
    """Wire time of one frame in microseconds: (overhead + size) * 8 / nbw."""
    size = exact(size)
    if size <= 0:
        raise ValueError("size must be positive")
    return (consts.wire_overhead + size) * 8 / consts.nbw


def transmission_time_ns(size: Number, consts: NetworkConstants = DEFAULT_CONSTANTS) -> int:
    return math.ceil(transmission_time(size, consts) * NS_PER_US)


def max_jitter_for_es(
    vls: Iterable[VirtualLinkSpec], consts: NetworkConstants = DEFAULT_CONSTANTS
) -> Fraction:
    """Maximum emission jitter (us) for an end system hosting ``vls``.

    Technological floor plus the wire time of one max-size frame of every
    hosted VL, clamped to the hard limit.
    """
    vls = list(vls)
    if len({vl.source for vl in vls}) > 1:
        raise ValueError("all VLs must share the same source end system")
    raw = consts.tech_jitter_floor_us + sum(
        (transmission_time(vl.s_max, consts) for vl in vls), Fraction(0)
    )
    return min(raw, consts.jitter_hard_limit_us)


def resolve_jitter(
    vls: Sequence[VirtualLinkSpec], consts: NetworkConstants = DEFAULT_CONSTANTS
) -> list[VirtualLinkSpec]:
    """Fill in missing ``j_max_ns`` from the per-source-ES bound.

    Explicit per-VL values are kept as given.
    """
    by_source: dict[int, list[VirtualLinkSpec]] = {}
    for vl in vls:
        by_source.setdefault(vl.source, []).append(vl)
    bound = {
        es: math.floor(max_jitter_for_es(group, consts) * NS_PER_US)
        for es, group in by_source.items()
    }
    out = []
    for vl in vls:
        if vl.j_max_ns is None:
            vl = VirtualLinkSpec(vl.vl_id, vl.source, vl.destinations, vl.bag_ms, vl.s_max, bound[vl.source])
        out.append(vl)
    return out


def next_seq(seq: int) -> int:
    if not 0 <= seq <= 255:
        raise ValueError(f"sequence number {seq} outside 0..255")
    return seq + 1 if seq < 255 else 1


def advance_seq(seq: int, k: int) -> int:
    """Sequence number after ``k`` skipped periods plus the regular step."""
    if k < 0:
        raise ValueError("skipped-period count must be non-negative")
    if not 0 <= seq <= 255:
        raise ValueError(f"sequence number {seq} outside 0..255")
    steps = k + 1
    if seq == 0:
        seq, steps = 1, steps - 1
    return (seq - 1 + steps) % 255 + 1


def encode_dest_mac(vl_id: int) -> bytes:
    if not 0 <= vl_id <= 0xFFFF:
        raise ValueError(f"vl_id {vl_id} does not fit 16 bits")
    return MAC_PREFIX + vl_id.to_bytes(2, "big")


def decode_dest_mac(mac: bytes) -> int:
    if len(mac) != 6 or mac[:4] != MAC_PREFIX:
        raise ValueError(f"{format_mac(mac)} is not an AFDX virtual link address")
    return int.from_bytes(mac[4:], "big")


def format_mac(mac: bytes) -> str:
    return ":".join(f"{b:02x}" for b in mac)


def parse_mac(text: str) -> bytes:
    parts = text.split(":")
    if len(parts) != 6:
        raise ValueError(f"bad MAC address {text!r}")
    return bytes(int(p, 16) for p in parts)


def format_vl_field(vl_id: int) -> str:
    """The ``hh:ll`` VL identifier used in switch flow definitions."""
    return format_mac(encode_dest_mac(vl_id))[-5:]


def parse_vl_field(text: str) -> int:
    hi, lo = text.split(":")
    return int(hi, 16) << 8 | int(lo, 16)
